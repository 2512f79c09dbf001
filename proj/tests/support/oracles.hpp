#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "featflow/planner.hpp"
#include "featflow/result.hpp"
#include "featflow/stim.hpp"
#include "featflow/transformer.hpp"

namespace featflow::testing {

// Independent re-statement of the planner's rules, kept deliberately naive.
struct OracleConverter {
  std::string name;
  std::vector<StimKind> inputs;
  StimKind output = StimKind::kText;
  std::size_t registration_index = 0;
  std::size_t preference = 0;  // position in the preference list, or its size
  bool banned = false;
};

// Written out as a table instead of going through is_subtype/element_kind.
bool oracle_satisfies(StimKind reached, StimKind target);
bool oracle_accepts(const OracleConverter& c, StimKind kind);

// Enumerates every walk of 0..max_hops converters, returns the steps of the
// shortest valid one with the smallest rank sequence, nullopt if none.
std::optional<std::vector<std::string>> brute_force_path(const std::vector<OracleConverter>& converters,
                                                         StimKind from, StimKind to,
                                                         std::size_t max_hops);

struct PlannerCase {
  Registry registry;
  ConversionPrefs prefs;
  std::vector<OracleConverter> converters;
};

// Up to 20 converters over the seven stim kinds with random preference
// lists and bans. Some converters share input/output kinds so that rank
// tie-breaks matter.
PlannerCase random_planner_case(std::mt19937& rng);

// O(N^2) DFT straight from the definition; only bins 0..N/2.
std::vector<std::complex<double>> direct_dft_one_sided(const std::vector<double>& x);

// Symmetric Hann: 0.5 - 0.5 cos(2 pi n / (N - 1)).
std::vector<double> oracle_hann(std::size_t n);

// 1..8 results over a few stim ids and extractors, with absent onsets,
// text values and empty results mixed in.
std::vector<ExtractorResult> random_results(std::mt19937& rng);

// Rows times features, summed over results.
std::size_t expected_row_count(const std::vector<ExtractorResult>& results);

}  // namespace featflow::testing
