#include "t2s/pipeline.hpp"

int main(int argc, char** argv) { return t2s::run_cli(argc, argv); }
