#include "relbound/freegroup.hpp"

#include <algorithm>
#include <cctype>

#include "relbound/errors.hpp"

namespace relbound {

namespace {

void require_rank(int rank) {
  if (rank < 1 || rank > kMaxRank) {
    throw UsageError("rank must be in [1, " + std::to_string(kMaxRank) + "], got " + std::to_string(rank));
  }
}

void require_same_rank(const Word& u, const Word& v) {
  if (u.rank() != v.rank()) {
    throw UsageError("rank mismatch: F_" + std::to_string(u.rank()) + " vs F_" + std::to_string(v.rank()));
  }
}

// Generator symbols skip 'e', which denotes the identity.
char generator_symbol(int g) { return static_cast<char>(g < 4 ? 'a' + g : 'a' + g + 1); }

int symbol_generator(char lower) {
  if (lower < 'a' || lower > 'z' || lower == 'e') return -1;
  return lower < 'e' ? lower - 'a' : lower - 'a' - 1;
}

}  // namespace

char Letter::symbol() const {
  const char c = generator_symbol(generator());
  return is_inverse() ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c;
}

Word::Word(int rank) : rank_(rank) { require_rank(rank); }

Word::Word(int rank, std::vector<Letter> letters) : rank_(rank) {
  require_rank(rank);
  letters_.reserve(letters.size());
  for (Letter l : letters) {
    if (l.generator() >= rank) throw UsageError("letter outside rank " + std::to_string(rank));
    if (!letters_.empty() && letters_.back() == l.inverse()) {
      letters_.pop_back();
    } else {
      letters_.push_back(l);
    }
  }
}

Word Word::generator(int rank, int index, bool inverse) {
  if (index < 0 || index >= rank) throw UsageError("generator index out of range");
  Word w(rank);
  w.letters_.push_back(Letter(index, inverse));
  return w;
}

Word Word::parse(std::string_view text, int rank) {
  require_rank(rank);
  if (text.empty() || text == "e") return Word(rank);
  std::vector<Letter> letters;
  letters.reserve(text.size());
  for (char c : text) {
    const bool inverse = std::isupper(static_cast<unsigned char>(c)) != 0;
    const int g = symbol_generator(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (g < 0 || g >= rank) {
      throw UsageError("invalid letter '" + std::string(1, c) + "' for rank " + std::to_string(rank) + " in \"" +
                       std::string(text) + "\"");
    }
    letters.emplace_back(g, inverse);
  }
  Word w(rank, std::move(letters));
  if (w.size() != text.size()) throw UsageError("word \"" + std::string(text) + "\" is not reduced");
  return w;
}

Word Word::prefix(std::size_t n) const {
  Word w(rank_);
  w.letters_.assign(letters_.begin(), letters_.begin() + static_cast<std::ptrdiff_t>(std::min(n, size())));
  return w;
}

bool Word::is_prefix_of(const Word& other) const {
  return size() <= other.size() && std::equal(letters_.begin(), letters_.end(), other.letters_.begin());
}

Word Word::extended(Letter l) const {
  if (!empty() && back() == l.inverse()) throw UsageError("extension letter cancels");
  Word w = *this;
  w.letters_.push_back(l);
  return w;
}

std::string Word::str() const {
  if (letters_.empty()) return "e";
  std::string s;
  s.reserve(letters_.size());
  for (Letter l : letters_) s.push_back(l.symbol());
  return s;
}

std::strong_ordering Word::operator<=>(const Word& other) const {
  if (auto c = rank_ <=> other.rank_; c != 0) return c;
  if (auto c = size() <=> other.size(); c != 0) return c;
  return std::lexicographical_compare_three_way(letters_.begin(), letters_.end(), other.letters_.begin(),
                                                other.letters_.end());
}

Word concat_reduce(const Word& u, const Word& v) {
  require_same_rank(u, v);
  auto ul = u.letters();
  auto vl = v.letters();
  std::size_t cancel = 0;
  while (cancel < ul.size() && cancel < vl.size() && ul[ul.size() - 1 - cancel] == vl[cancel].inverse()) ++cancel;
  std::vector<Letter> out;
  out.reserve(ul.size() + vl.size() - 2 * cancel);
  out.insert(out.end(), ul.begin(), ul.end() - static_cast<std::ptrdiff_t>(cancel));
  out.insert(out.end(), vl.begin() + static_cast<std::ptrdiff_t>(cancel), vl.end());
  return Word(u.rank(), std::move(out));
}

Word invert(const Word& u) {
  std::vector<Letter> out;
  out.reserve(u.size());
  for (auto it = u.letters().rbegin(); it != u.letters().rend(); ++it) out.push_back(it->inverse());
  return Word(u.rank(), std::move(out));
}

std::vector<Word> children(const Word& w) {
  std::vector<Word> out;
  out.reserve(2 * static_cast<std::size_t>(w.rank()));
  for (int code = 0; code < 2 * w.rank(); ++code) {
    const Letter l = Letter::from_code(code);
    if (!w.empty() && w.back() == l.inverse()) continue;
    out.push_back(w.extended(l));
  }
  return out;
}

namespace {

void extend_to_depth(const Word& w, std::size_t depth, std::vector<Word>& out) {
  if (w.size() == depth) {
    out.push_back(w);
    return;
  }
  for (const Word& c : children(w)) extend_to_depth(c, depth, out);
}

}  // namespace

std::vector<Word> sphere(int rank, std::size_t depth) {
  std::vector<Word> out;
  extend_to_depth(Word(rank), depth, out);
  return out;
}

std::vector<Word> ball(int rank, std::size_t radius) {
  std::vector<Word> out;
  for (std::size_t r = 0; r <= radius; ++r) {
    auto s = sphere(rank, r);
    out.insert(out.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
  }
  return out;
}

BoundarySet BoundarySet::cylinder(Word w) {
  if (w.empty()) return BoundarySet(Kind::Full, std::move(w));
  return BoundarySet(Kind::Cylinder, std::move(w));
}

BoundarySet BoundarySet::cocylinder(Word w) {
  if (w.empty()) return BoundarySet(Kind::Empty, std::move(w));
  return BoundarySet(Kind::CoCylinder, std::move(w));
}

BoundarySet BoundarySet::complement() const {
  switch (kind_) {
    case Kind::Full: return none(rank());
    case Kind::Empty: return full(rank());
    case Kind::Cylinder: return cocylinder(word_);
    case Kind::CoCylinder: return cylinder(word_);
  }
  return *this;
}

std::string BoundarySet::str() const {
  switch (kind_) {
    case Kind::Full: return "Full";
    case Kind::Empty: return "Empty";
    case Kind::Cylinder: return "[" + word_.str() + "]";
    case Kind::CoCylinder: return "co[" + word_.str() + "]";
  }
  return {};
}

BoundarySet preimage(const Word& g, const BoundarySet& s) {
  require_same_rank(g, s.word());
  switch (s.kind()) {
    case BoundarySet::Kind::Full:
    case BoundarySet::Kind::Empty:
      return s;
    case BoundarySet::Kind::CoCylinder:
      return preimage(g, s.complement()).complement();
    case BoundarySet::Kind::Cylinder:
      break;
  }
  const Word& w = s.word();
  // g⁻¹w cancels exactly as far as w is a prefix of g.
  std::size_t common = 0;
  while (common < g.size() && common < w.size() && g[common] == w[common]) ++common;
  const Word u = concat_reduce(invert(g), w);
  if (common == w.size()) {
    // w fully consumed: g = w·v, and gξ ∈ [w] iff vξ does not start with last(w)⁻¹.
    return BoundarySet::cocylinder(concat_reduce(u, Word(g.rank(), {w.back().inverse()})));
  }
  return BoundarySet::cylinder(u);
}

std::vector<Word> refine(const BoundarySet& s, std::size_t depth) {
  const std::size_t need = s.word().size();
  if (depth < need) {
    throw UsageError("refine depth " + std::to_string(depth) + " is below the defining word length " +
                     std::to_string(need));
  }
  switch (s.kind()) {
    case BoundarySet::Kind::Empty:
      return {};
    case BoundarySet::Kind::Full:
      return sphere(s.rank(), depth);
    case BoundarySet::Kind::Cylinder: {
      std::vector<Word> out;
      extend_to_depth(s.word(), depth, out);
      return out;
    }
    case BoundarySet::Kind::CoCylinder: {
      auto all = sphere(s.rank(), depth);
      std::erase_if(all, [&](const Word& u) { return s.word().is_prefix_of(u); });
      return all;
    }
  }
  return {};
}

}  // namespace relbound
