#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "bpi/tuning.hpp"

#ifndef BPI_FIXTURE_DIR
#error "BPI_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace bpi::test {

inline const nlohmann::json& oracles() {
  static const nlohmann::json j = [] {
    std::ifstream in(std::string(BPI_FIXTURE_DIR) + "/oracles.json");
    if (!in) throw std::runtime_error("cannot open oracles.json");
    return nlohmann::json::parse(in);
  }();
  return j;
}

inline double mixture_entropy() { return oracles()["mixture_d3"]["shannon_entropy"]; }
inline double mixture_renyi05() { return oracles()["mixture_d3"]["renyi05_integral"]; }

inline TheoryConstants mixture_shannon_constants() {
  const auto& s = oracles()["mixture_d3"]["shannon"];
  TheoryConstants c;
  c.c1 = s["c1"];
  c.c2 = s["c2"];
  c.c3 = s["c3"];
  c.c4 = s["c4"];
  c.c5 = s["c5"];
  c.mode = "oracle";
  c.n_mc = oracles()["n_draws"];
  return c;
}

inline TheoryConstants mixture_renyi05_constants() {
  const auto& s = oracles()["mixture_d3"]["renyi05"];
  TheoryConstants c;
  c.c2 = s["c2"];
  c.c4 = s["c4"];
  c.c5 = s["c5"];
  c.c1_available = false;
  c.mode = "oracle";
  c.n_mc = oracles()["n_draws"];
  return c;
}

inline double manifold_c_v() { return oracles()["manifold_d2"]["c_v"]; }

}  // namespace bpi::test
