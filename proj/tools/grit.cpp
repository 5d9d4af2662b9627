#include "grit/cli/app.hpp"

int main(int argc, char** argv) { return grit::cli::run_main(argc, argv); }
