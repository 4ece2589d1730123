#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "wigner/errors.hpp"
#include "wigner/potential.hpp"

namespace wigner {

enum class ProcessKind { pairwise1, pairwise2, pairwise3, pairwise4, ring3, ring4, ring5, ring6 };

inline const std::vector<ProcessKind>& all_process_kinds() {
  static const std::vector<ProcessKind> kinds{
      ProcessKind::pairwise1, ProcessKind::pairwise2, ProcessKind::pairwise3,
      ProcessKind::pairwise4, ProcessKind::ring3,     ProcessKind::ring4,
      ProcessKind::ring5,     ProcessKind::ring6};
  return kinds;
}

inline bool is_pairwise(ProcessKind k) { return k <= ProcessKind::pairwise4; }

/// Number of electrons in a ring, or the neighbour order of a pairwise exchange.
inline int kind_order(ProcessKind k) {
  switch (k) {
    case ProcessKind::pairwise1: return 1;
    case ProcessKind::pairwise2: return 2;
    case ProcessKind::pairwise3: return 3;
    case ProcessKind::pairwise4: return 4;
    case ProcessKind::ring3: return 3;
    case ProcessKind::ring4: return 4;
    case ProcessKind::ring5: return 5;
    case ProcessKind::ring6: return 6;
  }
  return 0;
}

/// Index span covered by one process: k+1 for a k-th neighbour swap, k for a k-ring.
inline int kind_span(ProcessKind k) { return is_pairwise(k) ? kind_order(k) + 1 : kind_order(k); }

inline std::string kind_name(ProcessKind k) {
  return is_pairwise(k) ? "J" + std::to_string(kind_order(k)) : "R" + std::to_string(kind_order(k));
}

inline ProcessKind parse_kind(const std::string& s) {
  for (auto k : all_process_kinds())
    if (kind_name(k) == s) return k;
  throw InvalidArgument("unknown process kind '" + s + "'");
}

/// A cyclic permutation of electrons, 1-based.
///
/// Electron cycle[i] moves to the position of cycle[i+1] (wrapping around).
struct ExchangeProcess {
  std::vector<int> cycle;
  ProcessKind kind = ProcessKind::pairwise1;
  int start_index = 1;

  int m_p() const { return static_cast<int>(cycle.size()) - 1; }
  int a_p() const { return cycle.size() == 2 ? 2 : 1; }

  /// "J1_3_4" for a swap of electrons 3 and 4, "R4_2" for the 4-ring starting at 2.
  std::string id() const {
    if (is_pairwise(kind))
      return kind_name(kind) + "_" + std::to_string(cycle[0]) + "_" + std::to_string(cycle[1]);
    return kind_name(kind) + "_" + std::to_string(start_index);
  }

  void validate(int n) const {
    if (cycle.size() < 2) throw InvalidArgument("a cycle needs at least two electrons");
    std::set<int> seen;
    for (int c : cycle) {
      if (c < 1 || c > n)
        throw InvalidArgument("cycle index " + std::to_string(c) + " outside 1.." + std::to_string(n));
      if (!seen.insert(c).second) throw InvalidArgument("cycle indices must be distinct");
    }
  }

  bool operator==(const ExchangeProcess&) const = default;
};

/// Perimeter order of a ring of `k` consecutive electrons starting at `s`.
///
/// In a zig-zag, odd offsets lie on one row and even offsets on the other, so
/// going round the polygon visits s, then the odd offsets outward, then the
/// even offsets back: (s, s+1, s+3, s+2) for four electrons.
inline std::vector<int> ring_cycle(int s, int k) {
  std::vector<int> c{s};
  for (int o = 1; o < k; o += 2) c.push_back(s + o);
  const int last_even = (k - 1) % 2 == 0 ? k - 1 : k - 2;
  for (int o = last_even; o >= 2; o -= 2) c.push_back(s + o);
  return c;
}

inline ExchangeProcess make_process(ProcessKind kind, int start) {
  ExchangeProcess p;
  p.kind = kind;
  p.start_index = start;
  if (is_pairwise(kind))
    p.cycle = {start, start + kind_order(kind)};
  else
    p.cycle = ring_cycle(start, kind_order(kind));
  return p;
}

/// All processes of the requested kinds, grouped by kind then ordered by start index.
inline std::vector<ExchangeProcess> enumerate_processes(int n, const std::vector<ProcessKind>& kinds) {
  if (n < 2) throw InvalidArgument("need at least two electrons");
  std::vector<ExchangeProcess> out;
  for (auto k : kinds) {
    const int span = kind_span(k);
    for (int s = 1; s + span - 1 <= n; ++s) out.push_back(make_process(k, s));
  }
  return out;
}

inline std::vector<ExchangeProcess> enumerate_processes(int n) {
  return enumerate_processes(n, all_process_kinds());
}

/// The process obtained by reflecting the chain, i -> N + 1 - i.
inline ExchangeProcess mirror_process(const ExchangeProcess& p, int n) {
  return make_process(p.kind, n - p.start_index - kind_span(p.kind) + 2);
}

/// Moves coordinate blocks along the cycle: electron c[i] takes the place of c[i+1].
///
/// Position slot c[i] of the result holds the coordinates previously at c[i+1],
/// so the result describes the same set of occupied sites with relabelled electrons.
inline ElectronConfiguration permute_configuration(const ElectronConfiguration& r,
                                                   const ExchangeProcess& proc) {
  const int n = static_cast<int>(r.size() / 2);
  proc.validate(n);
  ElectronConfiguration out = r;
  const auto& c = proc.cycle;
  const std::size_t len = c.size();
  for (std::size_t i = 0; i < len; ++i) {
    const int dst = c[i] - 1, src = c[(i + 1) % len] - 1;
    out.segment<2>(2 * dst) = r.segment<2>(2 * src);
  }
  return out;
}

inline int parity_sign(const ExchangeProcess& proc) { return proc.m_p() % 2 == 0 ? 1 : -1; }

}  // namespace wigner
