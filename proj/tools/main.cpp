#include "nlsobs/experiment.hpp"

int main(int argc, char** argv) { return nlsobs::cli_main(argc, argv); }
