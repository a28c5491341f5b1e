#include "laftr/graph.hpp"

#include <algorithm>
#include <charconv>
#include <random>
#include <sstream>
#include <unordered_set>

#include "laftr/error.hpp"

namespace laftr {

namespace {

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r')) ++pos;
    std::size_t end = pos;
    while (end < line.size() && line[end] != ' ' && line[end] != '\t' && line[end] != '\r') ++end;
    if (end > pos) tokens.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return tokens;
}

bool is_blank_or_comment(std::string_view line) {
  for (char c : line) {
    if (c == '#') return true;
    if (c != ' ' && c != '\t' && c != '\r') return false;
  }
  return true;
}

std::optional<std::size_t> parse_index(std::string_view token) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) return std::nullopt;
  return value;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw ParseError("line " + std::to_string(line_no) + ": " + what);
}

}  // namespace

AdjacencyMatrix::AdjacencyMatrix(BinaryMatrix entries, bool symmetric_hint)
    : entries_(std::move(entries)), symmetric_hint_(symmetric_hint) {
  if (entries_.rows() != entries_.cols()) throw ArgumentError("adjacency matrix must be square");
  for (auto v : entries_.flat())
    if (v > 1) throw ArgumentError("adjacency entries must be 0 or 1");
}

bool AdjacencyMatrix::is_symmetric() const {
  for (std::size_t i = 0; i < n(); ++i)
    for (std::size_t j = i + 1; j < n(); ++j)
      if (entries_(i, j) != entries_(j, i)) return false;
  return true;
}

void AdjacencyMatrix::set_labels(std::vector<std::string> labels) {
  if (labels.size() != n())
    throw ArgumentError("expected " + std::to_string(n()) + " labels, got " +
                        std::to_string(labels.size()));
  std::unordered_set<std::string> seen(labels.begin(), labels.end());
  if (seen.size() != labels.size()) throw ArgumentError("node labels must be distinct");
  labels_ = std::move(labels);
}

ObservationMask::ObservationMask(BinaryMatrix observed) : observed_(std::move(observed)) {
  if (observed_.rows() != observed_.cols()) throw ArgumentError("mask must be square");
}

ObservationMask ObservationMask::all_off_diagonal(std::size_t n, bool include_diagonal) {
  ObservationMask mask(BinaryMatrix(n, n, 1));
  if (!include_diagonal)
    for (std::size_t i = 0; i < n; ++i) mask.set(i, i, false);
  return mask;
}

std::size_t ObservationMask::count() const {
  return static_cast<std::size_t>(std::count(observed_.flat().begin(), observed_.flat().end(), 1));
}

std::vector<std::pair<std::size_t, std::size_t>> ObservationMask::entries() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < n(); ++i)
    for (std::size_t j = 0; j < n(); ++j)
      if (observed_(i, j)) out.emplace_back(i, j);
  return out;
}

ObservationMask ObservationMask::without_diagonal() const {
  ObservationMask copy = *this;
  for (std::size_t i = 0; i < n(); ++i) copy.set(i, i, false);
  return copy;
}

AdjacencyMatrix load_edge_list(std::istream& in, std::optional<std::size_t> n) {
  struct Edge {
    std::size_t src, dst;
    std::uint8_t value;
  };
  std::vector<Edge> edges;
  std::size_t max_id = 0;
  bool any = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank_or_comment(line)) continue;
    auto tokens = tokenize(line);
    if (tokens.size() != 2 && tokens.size() != 3) fail(line_no, "expected 'src dst [v]'");
    auto src = parse_index(tokens[0]);
    auto dst = parse_index(tokens[1]);
    if (!src || !dst) fail(line_no, "node ids must be non-negative integers");
    std::uint8_t value = 1;
    if (tokens.size() == 3) {
      if (tokens[2] == "0") value = 0;
      else if (tokens[2] != "1") fail(line_no, "edge value must be 0 or 1");
    }
    if (n && (*src >= *n || *dst >= *n))
      fail(line_no, "node id out of range for n=" + std::to_string(*n));
    max_id = std::max({max_id, *src, *dst});
    any = true;
    edges.push_back({*src, *dst, value});
  }
  const std::size_t size = n ? *n : (any ? max_id + 1 : 0);
  BinaryMatrix entries(size, size, 0);
  for (const auto& e : edges) entries(e.src, e.dst) = e.value;
  return AdjacencyMatrix(std::move(entries), false);
}

AdjacencyMatrix load_dense_matrix(std::istream& in) {
  std::vector<std::vector<std::uint8_t>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank_or_comment(line)) continue;
    auto& row = rows.emplace_back();
    for (auto token : tokenize(line)) {
      if (token == "0") row.push_back(0);
      else if (token == "1") row.push_back(1);
      else fail(line_no, "matrix entries must be 0 or 1, got '" + std::string(token) + "'");
    }
    if (row.size() != rows.front().size()) fail(line_no, "ragged row");
  }
  const std::size_t n = rows.size();
  if (n > 0 && rows.front().size() != n)
    throw ParseError("matrix is " + std::to_string(n) + "x" + std::to_string(rows.front().size()) +
                     ", expected square");
  BinaryMatrix entries(n, n);
  for (std::size_t i = 0; i < n; ++i) std::copy(rows[i].begin(), rows[i].end(), entries.row(i).begin());
  AdjacencyMatrix adj(std::move(entries));
  return AdjacencyMatrix(adj.entries(), adj.is_symmetric());
}

void write_dense_matrix(std::ostream& out, const AdjacencyMatrix& adj) {
  for (std::size_t i = 0; i < adj.n(); ++i) {
    for (std::size_t j = 0; j < adj.n(); ++j) {
      if (j) out << ' ';
      out << static_cast<int>(adj(i, j));
    }
    out << '\n';
  }
}

Split split_observations(const AdjacencyMatrix& adj, double train_fraction, std::uint64_t seed,
                         bool tie_symmetric, bool include_diagonal) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0))
    throw ArgumentError("train_fraction must lie in (0, 1]");
  const std::size_t n = adj.n();

  // Sampling units: single entries, or unordered pairs when tying mirrored entries.
  std::vector<std::pair<std::size_t, std::size_t>> units;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j && !include_diagonal) continue;
      if (tie_symmetric && j < i) continue;
      units.emplace_back(i, j);
    }
  }
  std::mt19937_64 rng(seed);
  std::shuffle(units.begin(), units.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(units.size())));

  Split split{ObservationMask(n), ObservationMask(n)};
  for (std::size_t u = 0; u < units.size(); ++u) {
    auto& mask = u < n_train ? split.train : split.test;
    auto [i, j] = units[u];
    mask.set(i, j, true);
    if (tie_symmetric) mask.set(j, i, true);
  }
  return split;
}

void write_mask_file(std::ostream& out, const Split& split) {
  for (std::size_t i = 0; i < split.train.n(); ++i) {
    for (std::size_t j = 0; j < split.train.n(); ++j) {
      if (split.train(i, j)) out << i << ' ' << j << " 1\n";
      else if (split.test(i, j)) out << i << ' ' << j << " 0\n";
    }
  }
}

Split load_mask_file(std::istream& in, std::size_t n) {
  Split split{ObservationMask(n), ObservationMask(n)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank_or_comment(line)) continue;
    auto tokens = tokenize(line);
    if (tokens.size() != 3) fail(line_no, "expected 'i j {0|1}'");
    auto i = parse_index(tokens[0]);
    auto j = parse_index(tokens[1]);
    if (!i || !j || *i >= n || *j >= n) fail(line_no, "bad or out-of-range node index");
    if (tokens[2] == "1") split.train.set(*i, *j, true);
    else if (tokens[2] == "0") split.test.set(*i, *j, true);
    else fail(line_no, "mask flag must be 0 or 1");
    if (split.train(*i, *j) && split.test(*i, *j)) fail(line_no, "entry listed as both train and test");
  }
  return split;
}

std::vector<std::pair<std::size_t, std::size_t>> load_pair_list(std::istream& in) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank_or_comment(line)) continue;
    auto tokens = tokenize(line);
    if (tokens.size() < 2) fail(line_no, "expected 'i j'");
    auto i = parse_index(tokens[0]);
    auto j = parse_index(tokens[1]);
    if (!i || !j) fail(line_no, "node ids must be non-negative integers");
    pairs.emplace_back(*i, *j);
  }
  return pairs;
}

}  // namespace laftr
