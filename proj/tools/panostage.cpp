// Copyright 2026 The panostage Authors
// SPDX-License-Identifier: Apache-2.0

#include "panostage/cli.hpp"

int main(int argc, char** argv) { return panostage::run_cli(std::vector<std::string>(argv, argv + argc)); }
