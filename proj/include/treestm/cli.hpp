/*
   Copyright 2026 The treestm Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/
#ifndef TREESTM_CLI_HPP
#define TREESTM_CLI_HPP

#include <string>
#include <vector>

namespace treestm {

// Commands: train, eval, generate, check.
// Exit codes: 0 success; 1 usage/parse/validation error; 2 numerical
// failure (non-finite bound term, named in the message); 3 failed self
// check.
int run_cli(const std::vector<std::string>& args);

}  // namespace treestm

#endif
