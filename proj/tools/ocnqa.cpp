#include "ocn/pipeline.hpp"

int main(int argc, char** argv) {
  return ocn::run_pipeline(argc, argv);
}
