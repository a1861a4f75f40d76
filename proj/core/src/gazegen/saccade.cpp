#include "gazenlu/gazegen/saccade.hpp"

#include <algorithm>
#include <stdexcept>

#include "gazenlu/diffcore/ops.hpp"

namespace gazenlu::gazegen {

OffsetLayout::OffsetLayout(std::size_t max_offset_len) : max_len_(max_offset_len) {
  if (max_offset_len < 2) throw std::invalid_argument("offset layout: L_max must be at least 2");
}

std::optional<std::size_t> OffsetLayout::class_of(std::ptrdiff_t offset) const {
  if (offset < -max_offset() || offset > max_offset()) return std::nullopt;
  return static_cast<std::size_t>(offset + max_offset());
}

std::ptrdiff_t OffsetLayout::offset_of(std::size_t cls) const {
  if (cls >= stop_class()) throw std::out_of_range("offset layout: class has no offset");
  return static_cast<std::ptrdiff_t>(cls) - max_offset();
}

std::vector<std::uint8_t> OffsetLayout::valid_mask(std::ptrdiff_t current,
                                                   std::size_t words) const {
  const auto w = static_cast<std::ptrdiff_t>(words);
  if (current < kVirtualStart || current >= w)
    throw std::out_of_range("valid_mask: position " + std::to_string(current) +
                            " outside sentence of " + std::to_string(words) + " words");
  std::vector<std::uint8_t> mask(num_classes(), 0);
  for (std::size_t c = 0; c < stop_class(); ++c) {
    const std::ptrdiff_t land = current + offset_of(c);
    mask[c] = land >= 0 && land < w;
  }
  mask[stop_class()] = current != kVirtualStart;
  return mask;
}

diffcore::Tensor OffsetLayout::mask_row(std::ptrdiff_t current, std::size_t words) const {
  const auto valid = valid_mask(current, words);
  std::vector<double> row(valid.size());
  for (std::size_t c = 0; c < valid.size(); ++c) row[c] = valid[c] ? 0.0 : diffcore::kMaskedLogit;
  return diffcore::Tensor::from_values(1, row.size(), std::move(row));
}

void GumbelConfig::validate() const {
  if (!(temperature > 0.0))
    throw std::invalid_argument("gumbel: temperature must be positive, got " +
                                std::to_string(temperature));
}

GumbelMode parse_gumbel_mode(const std::string& text) {
  if (text == "straight_through") return GumbelMode::straight_through;
  if (text == "soft_convolution") return GumbelMode::soft_convolution;
  throw std::invalid_argument("unknown gumbel mode '" + text + "'");
}

std::string to_string(GumbelMode mode) {
  return mode == GumbelMode::straight_through ? "straight_through" : "soft_convolution";
}

std::size_t default_max_fixations(std::size_t words) { return std::min<std::size_t>(2 * words, 64); }

void check_fixations(const std::vector<std::size_t>& fixations, std::size_t words) {
  for (std::size_t i = 0; i < fixations.size(); ++i)
    if (fixations[i] >= words)
      throw std::out_of_range("fixation " + std::to_string(i) + " is word " +
                              std::to_string(fixations[i]) + " but the sentence has " +
                              std::to_string(words) + " words");
}

}  // namespace gazenlu::gazegen
