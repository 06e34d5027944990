// rescore/cli.h

// Copyright 2026  The rescore Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef RESCORE_CLI_H_
#define RESCORE_CLI_H_

#include <iostream>
#include <string>
#include <vector>

namespace rescore {

// Whole command-line tool as a callable, so tests can run subcommands
// in-process and capture their output. args excludes argv[0]. Returns
// the process exit code: 0 on success, nonzero with a one-line
// diagnostic on err otherwise.
int run_cli(const std::vector<std::string> &args,
            std::ostream &out = std::cout, std::ostream &err = std::cerr);

}  // namespace rescore

#endif  // RESCORE_CLI_H_
