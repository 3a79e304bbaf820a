// Copyright 2026 The nldir Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "nldir/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return nldir::dispatch(args, std::cout, std::cerr);
}
