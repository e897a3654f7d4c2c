#include "inspector/app.hpp"

int main(int argc, char** argv) { return inspector::run_cli(argc, argv); }
