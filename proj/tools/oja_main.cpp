#include <oja/cli.hpp>

int main(int argc, char** argv) { return oja::cli::run_pipeline(argc, argv); }
