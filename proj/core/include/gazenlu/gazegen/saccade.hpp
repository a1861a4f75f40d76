#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gazenlu/diffcore/tensor.hpp"

namespace gazenlu::gazegen {

/// Position before the first fixation.
inline constexpr std::ptrdiff_t kVirtualStart = -1;

/// Saccade classes: offsets -(L-1) .. +(L-1) in order, then STOP last.
class OffsetLayout {
 public:
  explicit OffsetLayout(std::size_t max_offset_len = 16);

  std::size_t max_offset_len() const { return max_len_; }
  std::size_t num_classes() const { return 2 * (max_len_ - 1) + 2; }
  std::size_t stop_class() const { return num_classes() - 1; }
  std::ptrdiff_t max_offset() const { return static_cast<std::ptrdiff_t>(max_len_) - 1; }

  std::optional<std::size_t> class_of(std::ptrdiff_t offset) const;
  /// Offset of a non-STOP class.
  std::ptrdiff_t offset_of(std::size_t cls) const;
  bool is_stop(std::size_t cls) const { return cls == stop_class(); }

  /// Validity of each class at `current` (kVirtualStart or a word index)
  /// in a sentence of `words` words.
  std::vector<std::uint8_t> valid_mask(std::ptrdiff_t current, std::size_t words) const;
  /// Additive mask row: 0 for valid classes, kMaskedLogit otherwise.
  diffcore::Tensor mask_row(std::ptrdiff_t current, std::size_t words) const;

 private:
  std::size_t max_len_;
};

enum class GumbelMode : std::uint8_t { straight_through, soft_convolution };

struct GumbelConfig {
  double temperature = 0.5;
  GumbelMode mode = GumbelMode::straight_through;
  /// Evaluation samples hard paths (no relaxation) when set.
  bool hard_eval = true;
  /// Straight-through rows carry the relaxed values forward instead of the
  /// one-hot; only for gradient checks.
  bool surrogate = false;

  void validate() const;
};

GumbelMode parse_gumbel_mode(const std::string& text);
std::string to_string(GumbelMode mode);

struct Scanpath {
  std::string sentence_id;
  std::vector<std::size_t> fixations;
  bool stopped = false;
  /// F×W per-step position weights; undefined for hard samples.
  diffcore::Tensor soft_weights;
};

/// min(2W, 64).
std::size_t default_max_fixations(std::size_t words);

/// Throws std::out_of_range naming the step when a fixation is ≥ words.
void check_fixations(const std::vector<std::size_t>& fixations, std::size_t words);

}  // namespace gazenlu::gazegen
