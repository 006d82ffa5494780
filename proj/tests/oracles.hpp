#pragma once

// Test-only brute-force oracles. They work on plain strings and explicit
// enumeration and deliberately share no code path with the library
// operations they check (other than the Word value type used for I/O).

#include <cctype>
#include <random>
#include <string>
#include <vector>

#include "relbound/freegroup.hpp"
#include "relbound/rational.hpp"

namespace oracle {

inline char inverse_char(char c) {
  return std::isupper(static_cast<unsigned char>(c)) ? static_cast<char>(std::tolower(c))
                                                     : static_cast<char>(std::toupper(c));
}

/// Letterwise stack cancellation over serialized words ("e" = identity).
inline std::string reduce(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (c == 'e') continue;
    if (!out.empty() && out.back() == inverse_char(c)) {
      out.pop_back();
    } else {
      out.push_back(c);
    }
  }
  return out;
}

inline std::string invert(const std::string& w) {
  std::string out;
  for (auto it = w.rbegin(); it != w.rend(); ++it) {
    if (*it != 'e') out.push_back(inverse_char(*it));
  }
  return out;
}

inline std::string alphabet(int rank) {
  std::string s;
  for (int i = 0; i < rank; ++i) {
    const char c = static_cast<char>(i < 4 ? 'a' + i : 'a' + i + 1);
    s.push_back(c);
    s.push_back(static_cast<char>(std::toupper(c)));
  }
  return s;
}

/// Every reduced string of exact length n, by extension of all strings.
inline std::vector<std::string> sphere(int rank, std::size_t n) {
  std::vector<std::string> level{""};
  const std::string letters = alphabet(rank);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> next;
    for (const auto& w : level) {
      for (char c : letters) {
        std::string x = w + c;
        if (reduce(x) == x) next.push_back(std::move(x));
      }
    }
    level = std::move(next);
  }
  return level;
}

/// Harmonic mass of a set of depth-n reduced strings: uniform on the n-sphere.
inline relbound::Rational uniform_share(std::size_t count, int rank, std::size_t n) {
  return relbound::make_rational(static_cast<long>(count), static_cast<long>(sphere(rank, n).size()));
}

/// Depth-n strings u such that g·u (reduced) starts with w. For n ≥ |g|+|w|+1
/// the cylinders [u] exactly tile g⁻¹[w].
inline std::vector<std::string> preimage_cells(const std::string& g, const std::string& w, int rank, std::size_t n) {
  std::vector<std::string> out;
  for (const auto& u : sphere(rank, n)) {
    const std::string gu = reduce(g + u);
    if (gu.size() >= w.size() && gu.compare(0, w.size(), w) == 0) out.push_back(u);
  }
  return out;
}

/// ν(g⁻¹[w]) for the uniform harmonic measure, by enumeration.
inline relbound::Rational harmonic_translate_mass(const std::string& g, const std::string& w, int rank) {
  const std::size_t n = g.size() + w.size() + 1;
  return uniform_share(preimage_cells(g, w, rank, n).size(), rank, n);
}

inline std::string random_reduced(std::mt19937_64& rng, int rank, std::size_t max_len) {
  const std::string letters = alphabet(rank);
  std::uniform_int_distribution<std::size_t> len_dist(0, max_len);
  std::uniform_int_distribution<std::size_t> letter_dist(0, letters.size() - 1);
  const std::size_t len = len_dist(rng);
  std::string w;
  while (w.size() < len) {
    const char c = letters[letter_dist(rng)];
    if (!w.empty() && w.back() == inverse_char(c)) continue;
    w.push_back(c);
  }
  return w;
}

inline relbound::Word word(const std::string& text, int rank = 2) { return relbound::Word::parse(text, rank); }

}  // namespace oracle
