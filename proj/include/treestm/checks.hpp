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
#ifndef TREESTM_CHECKS_HPP
#define TREESTM_CHECKS_HPP

#include <cstdint>
#include <iosfwd>

#include "treestm/elbo.hpp"
#include "treestm/model_state.hpp"

namespace treestm {

// A seeded random-but-valid document/state/model tuple: random uniform-
// attachment tree, positive gamma/omega, normalized phi rows, stochastic
// tau rows, positive nu. The workhorse input of every probabilistic check.
struct RandomState {
  DepDocument doc;
  DocVariational var;
  GlobalParams global;
  Hyperparams hyper;
};

RandomState make_random_state(int K, int N, std::uint64_t seed, int V = 6);

// document_elbo routed through the fault-injection hook: setting the
// environment variable TREESTM_FAULT=phi_entropy_sign flips the sign of the
// phi-entropy term (total re-derived from the components), simulating a
// term-level coding bug that the self checks must catch.
ElboBreakdown checked_document_elbo(const DepDocument& doc,
                                    const DocVariational& var,
                                    const GlobalParams& global,
                                    const Hyperparams& hyper);

// The oracle suite behind `treestm check`: Monte-Carlo bound agreement,
// gamma/nu gradient vs central differences, omega stationarity and value
// identity, the K=1 and N=0 closed-form identities, breakdown consistency,
// and a monotonicity audit of a small seeded training run. Prints one
// pass/fail line per check; returns true iff all pass.
bool run_self_checks(long mc_samples, std::uint64_t seed, std::ostream& out);

}  // namespace treestm

#endif
