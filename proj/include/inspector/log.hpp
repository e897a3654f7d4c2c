#pragma once

#include <functional>
#include <string>
#include <vector>

namespace inspector {

// Warnings go through a replaceable sink. The default writes one JSON object
// per line to stderr; tests install a capturing sink.
using WarningSink = std::function<void(const std::string&)>;

void warn(const std::string& message);

// Emits `message` only the first time it is seen in this process.
void warn_once(const std::string& message);

// Returns the previous sink.
WarningSink set_warning_sink(WarningSink sink);

class ScopedWarningCapture {
public:
    ScopedWarningCapture();
    ~ScopedWarningCapture();
    ScopedWarningCapture(const ScopedWarningCapture&) = delete;
    ScopedWarningCapture& operator=(const ScopedWarningCapture&) = delete;

    const std::vector<std::string>& messages() const { return messages_; }
    bool contains(const std::string& needle) const;

private:
    std::vector<std::string> messages_;
    WarningSink previous_;
};

}  // namespace inspector
