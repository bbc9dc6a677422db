#pragma once

// Patch label grids: one cell per tissue patch of a slide.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tasil/simd/kernels.hpp"

namespace tasil::grid {

// Classes a pathologist assigns during annotation.
enum class AnnotationClass : std::uint8_t {
  Tumour = 0,
  LymphocyteInflammatory = 1,
  Stroma = 2,
  Keratin = 3,
  Epithelium = 4,
  Artifacts = 5,
  Other = 6,
};

// Classes used for scoring. The numeric values are the byte codes the SIMD
// kernels operate on; NonROI must stay the only value >= 3.
enum class AnalysisClass : std::uint8_t {
  Tumour = 0,
  TAS = 1,
  Lymphocyte = 2,
  NonROI = 3,
};

template <typename Label>
struct ClassTraits;

template <>
struct ClassTraits<AnalysisClass> {
  static constexpr std::size_t kCount = 4;
  static constexpr std::array<char, kCount> kCodes{'T', 'S', 'L', 'N'};
  static constexpr std::array<std::string_view, kCount> kNames{"tumour", "tas", "lymphocyte",
                                                                "non_roi"};
};

template <>
struct ClassTraits<AnnotationClass> {
  static constexpr std::size_t kCount = 7;
  static constexpr std::array<char, kCount> kCodes{'T', 'L', 'S', 'K', 'E', 'A', 'O'};
  static constexpr std::array<std::string_view, kCount> kNames{
      "tumour", "lymphocyte_inflammatory", "stroma", "keratin", "epithelium", "artifacts", "other"};
};

template <typename Label>
constexpr std::size_t index_of(Label l) noexcept {
  return static_cast<std::size_t>(l);
}

template <typename Label>
constexpr char code_of(Label l) noexcept {
  return ClassTraits<Label>::kCodes[index_of(l)];
}

template <typename Label>
constexpr std::optional<Label> from_code(char c) noexcept {
  const auto& codes = ClassTraits<Label>::kCodes;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i] == c) return static_cast<Label>(i);
  }
  return std::nullopt;
}

// Microns per patch side used when a grid does not say otherwise.
inline constexpr double kDefaultPatchSizeUm = 35.0;

// Immutable row-major label grid. patch_size_um is carried for reporting
// only and never affects any score.
template <typename Label>
class LabelGrid {
 public:
  using label_type = Label;

  LabelGrid(std::string slide_id, std::size_t rows, std::size_t cols, std::vector<Label> labels,
            double patch_size_um = kDefaultPatchSizeUm);

  const std::string& slide_id() const noexcept { return slide_id_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return labels_.size(); }
  double patch_size_um() const noexcept { return patch_size_um_; }

  Label at(std::size_t r, std::size_t c) const noexcept { return labels_[r * cols_ + c]; }
  std::span<const Label> labels() const noexcept { return labels_; }
  std::span<const Label> row(std::size_t r) const noexcept {
    return std::span<const Label>(labels_).subspan(r * cols_, cols_);
  }

  // Label storage as raw byte codes, for the SIMD kernels.
  std::span<const std::uint8_t> codes() const noexcept {
    return {reinterpret_cast<const std::uint8_t*>(labels_.data()), labels_.size()};
  }
  std::span<const std::uint8_t> row_codes(std::size_t r) const noexcept {
    return codes().subspan(r * cols_, cols_);
  }

  bool same_shape(const LabelGrid& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  bool operator==(const LabelGrid&) const = default;

 private:
  std::string slide_id_;
  std::size_t rows_;
  std::size_t cols_;
  std::vector<Label> labels_;
  double patch_size_um_;
};

using AnalysisGrid = LabelGrid<AnalysisClass>;
using AnnotationGrid = LabelGrid<AnnotationClass>;

// ---- TLG file format --------------------------------------------------------
//
//   TLG v1 <rows> <cols> <patch_size_um>
//   <cols single-character class codes>      (rows lines)
//
// The slide id is not stored in the file; loaders take it from the file stem.

template <typename Label>
LabelGrid<Label> read_tlg(std::istream& in, std::string slide_id, const std::string& source);

template <typename Label>
void write_tlg(std::ostream& out, const LabelGrid<Label>& grid);

template <typename Label>
LabelGrid<Label> load_grid(const std::filesystem::path& path);

template <typename Label>
void save_grid(const LabelGrid<Label>& grid, const std::filesystem::path& path);

// Loads a grid for scoring. Files using any annotation-only code (K, E, A, O)
// are read as annotation grids and mapped; everything else is read as an
// analysis grid. T, L and S mean the same tissue under both code sets.
AnalysisGrid load_analysis_grid(const std::filesystem::path& path);

// Canonical rendering of the patch size field ("35.0", "32.5", ...).
std::string format_patch_size(double um);

// ---- class mapping ----------------------------------------------------------

constexpr AnalysisClass to_analysis_class(AnnotationClass a) noexcept {
  switch (a) {
    case AnnotationClass::Tumour:
      return AnalysisClass::Tumour;
    case AnnotationClass::LymphocyteInflammatory:
      return AnalysisClass::Lymphocyte;
    case AnnotationClass::Stroma:
      return AnalysisClass::TAS;
    default:
      return AnalysisClass::NonROI;
  }
}

AnalysisGrid map_to_analysis_classes(const AnnotationGrid& grid);

// Keeps only TAS cells within `max_distance` patches (Chebyshev) of some
// Tumour cell; other TAS cells become NonROI. Optional sensitivity filter.
AnalysisGrid restrict_stroma_to_tumour_vicinity(const AnalysisGrid& grid,
                                                std::size_t max_distance);

// ---- per-class statistics ---------------------------------------------------

using ClassCounts = std::array<std::uint64_t, ClassTraits<AnalysisClass>::kCount>;
using ClassFractions = std::array<double, ClassTraits<AnalysisClass>::kCount>;

ClassCounts class_counts(const AnalysisGrid& grid, simd::Backend backend = simd::Backend::Auto);
ClassFractions class_fractions(const AnalysisGrid& grid,
                               simd::Backend backend = simd::Backend::Auto);

// ---- segmentation agreement -------------------------------------------------

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes);
  // Row-major k*k counts: entry (i, j) = true class i predicted as j.
  ConfusionMatrix(std::size_t classes, std::vector<std::uint64_t> counts);

  std::size_t classes() const noexcept { return k_; }
  std::uint64_t at(std::size_t truth, std::size_t pred) const noexcept {
    return counts_[truth * k_ + pred];
  }
  void add(std::size_t truth, std::size_t pred, std::uint64_t n = 1) noexcept {
    counts_[truth * k_ + pred] += n;
  }
  std::uint64_t total() const noexcept;
  std::uint64_t trace() const noexcept;
  bool is_diagonal() const noexcept;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t k_;
  std::vector<std::uint64_t> counts_;
};

template <typename Label>
ConfusionMatrix confusion_matrix(const LabelGrid<Label>& truth, const LabelGrid<Label>& pred);

double accuracy(const ConfusionMatrix& cm);

// Unweighted mean of per-class F1. A class absent from both truth and
// prediction scores 0 and still counts toward the mean.
double macro_f1(const ConfusionMatrix& cm);

extern template class LabelGrid<AnalysisClass>;
extern template class LabelGrid<AnnotationClass>;

}  // namespace tasil::grid
