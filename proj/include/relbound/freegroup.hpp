#pragma once

// Reduced words in the free group F_k and the cylinder algebra on its boundary.
//
// Letters are encoded as small integers: code = 2*generator + (inverse ? 1 : 0),
// so the natural integer order is a < A < b < B < c < ...  Serialized words use
// lowercase for generators and uppercase for inverses; the identity is "e".

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace relbound {

inline constexpr int kMaxRank = 13;  // 'a'..'m'; 'e' is reserved for the identity

class Letter {
 public:
  constexpr Letter() = default;
  constexpr Letter(int generator, bool inverse) : code_(static_cast<std::uint8_t>(2 * generator + (inverse ? 1 : 0))) {}
  static constexpr Letter from_code(int code) { Letter l; l.code_ = static_cast<std::uint8_t>(code); return l; }

  constexpr int generator() const { return code_ >> 1; }
  constexpr bool is_inverse() const { return (code_ & 1) != 0; }
  constexpr int sign() const { return is_inverse() ? -1 : 1; }
  constexpr int code() const { return code_; }
  constexpr Letter inverse() const { return from_code(code_ ^ 1); }
  char symbol() const;

  friend constexpr auto operator<=>(Letter, Letter) = default;

 private:
  std::uint8_t code_ = 0;
};

/// An element of F_k stored as a cancellation-free letter sequence.
class Word {
 public:
  explicit Word(int rank);
  Word(int rank, std::vector<Letter> letters);  // reduces the input

  static Word identity(int rank) { return Word(rank); }
  static Word generator(int rank, int index, bool inverse = false);
  /// Parses "abA" style text; "e" or "" is the identity.
  static Word parse(std::string_view text, int rank);

  int rank() const { return rank_; }
  std::size_t size() const { return letters_.size(); }
  bool empty() const { return letters_.empty(); }
  std::span<const Letter> letters() const { return letters_; }
  Letter operator[](std::size_t i) const { return letters_[i]; }
  Letter front() const { return letters_.front(); }
  Letter back() const { return letters_.back(); }

  /// Word made of the first n letters.
  Word prefix(std::size_t n) const;
  /// True when this word is a prefix of other (as letter sequences).
  bool is_prefix_of(const Word& other) const;
  /// Appends a letter that does not cancel (child cylinder).
  Word extended(Letter l) const;

  std::string str() const;

  bool operator==(const Word& other) const = default;
  /// Shortlex order: length first, then letter order.
  std::strong_ordering operator<=>(const Word& other) const;

 private:
  int rank_;
  std::vector<Letter> letters_;
};

/// Reduced form of the concatenation u·v.
Word concat_reduce(const Word& u, const Word& v);
Word invert(const Word& u);
inline Word operator*(const Word& u, const Word& v) { return concat_reduce(u, v); }

/// All reduced words of length exactly d (the depth-d sphere) in letter order.
std::vector<Word> sphere(int rank, std::size_t depth);
/// All reduced words of length at most r, shortlex order.
std::vector<Word> ball(int rank, std::size_t radius);
/// Reduced words extending w by exactly one letter.
std::vector<Word> children(const Word& w);

/// Cylinder-algebra element on ∂F_k.
class BoundarySet {
 public:
  enum class Kind { Full, Empty, Cylinder, CoCylinder };

  static BoundarySet full(int rank) { return BoundarySet(Kind::Full, Word(rank)); }
  static BoundarySet none(int rank) { return BoundarySet(Kind::Empty, Word(rank)); }
  /// Cylinder(ε) normalizes to Full.
  static BoundarySet cylinder(Word w);
  /// CoCylinder(ε) normalizes to Empty.
  static BoundarySet cocylinder(Word w);

  Kind kind() const { return kind_; }
  int rank() const { return word_.rank(); }
  /// Defining word; the identity for Full/Empty.
  const Word& word() const { return word_; }
  BoundarySet complement() const;
  std::string str() const;

  bool operator==(const BoundarySet&) const = default;

 private:
  BoundarySet(Kind kind, Word w) : kind_(kind), word_(std::move(w)) {}
  Kind kind_;
  Word word_;
};

/// {ξ ∈ ∂F_k : gξ ∈ s}.
BoundarySet preimage(const Word& g, const BoundarySet& s);

/// Depth-d words whose cylinders partition s (up to null sets).
std::vector<Word> refine(const BoundarySet& s, std::size_t depth);

}  // namespace relbound
