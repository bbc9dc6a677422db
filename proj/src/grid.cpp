#include "tasil/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>

#include "tasil/error.hpp"

namespace tasil::grid {

template <typename Label>
LabelGrid<Label>::LabelGrid(std::string slide_id, std::size_t rows, std::size_t cols,
                            std::vector<Label> labels, double patch_size_um)
    : slide_id_(std::move(slide_id)),
      rows_(rows),
      cols_(cols),
      labels_(std::move(labels)),
      patch_size_um_(patch_size_um) {
  if (rows_ == 0 || cols_ == 0) {
    throw DataError("grid '" + slide_id_ + "': rows and cols must be at least 1");
  }
  if (labels_.size() != rows_ * cols_) {
    throw DataError("grid '" + slide_id_ + "': " + std::to_string(labels_.size()) +
                    " labels for a " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                    " grid");
  }
  if (!(patch_size_um_ > 0.0) || !std::isfinite(patch_size_um_)) {
    throw DataError("grid '" + slide_id_ + "': patch size must be a positive finite number");
  }
  for (Label l : labels_) {
    if (index_of(l) >= ClassTraits<Label>::kCount) {
      throw DataError("grid '" + slide_id_ + "': label value out of range");
    }
  }
}

template class LabelGrid<AnalysisClass>;
template class LabelGrid<AnnotationClass>;

// ---- TLG --------------------------------------------------------------------

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  for (auto& l : lines) {
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
  }
  return lines;
}

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc{} && res.ptr == end;
}

struct TlgHeader {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double patch_size_um = kDefaultPatchSizeUm;
};

TlgHeader parse_header(std::string_view line, const std::string& source) {
  const auto fields = split_spaces(line);
  if (fields.size() != 5 || fields[0] != "TLG") {
    throw ParseError(source, 1, "malformed header: expected 'TLG v1 <rows> <cols> <patch_size_um>'");
  }
  if (fields[1] != "v1") {
    throw ParseError(source, 1, "malformed header: unsupported version '" + std::string(fields[1]) + "'");
  }
  TlgHeader h;
  if (!parse_number(fields[2], h.rows) || h.rows == 0) {
    throw ParseError(source, 1, "malformed header: rows must be a positive integer");
  }
  if (!parse_number(fields[3], h.cols) || h.cols == 0) {
    throw ParseError(source, 1, "malformed header: cols must be a positive integer");
  }
  if (!parse_number(fields[4], h.patch_size_um) || !(h.patch_size_um > 0.0) ||
      !std::isfinite(h.patch_size_um)) {
    throw ParseError(source, 1, "malformed header: patch size must be a positive number");
  }
  return h;
}

std::string read_all(std::istream& in) {
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

std::string format_patch_size(double um) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, um);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return s;
}

template <typename Label>
LabelGrid<Label> read_tlg(std::istream& in, std::string slide_id, const std::string& source) {
  const std::string text = read_all(in);
  const auto lines = split_lines(text);
  if (lines.empty()) throw ParseError(source, 1, "malformed header: empty file");

  const TlgHeader h = parse_header(lines[0], source);
  if (h.rows > std::numeric_limits<std::size_t>::max() / h.cols) {
    throw ParseError(source, 1, "malformed header: grid dimensions overflow");
  }

  std::vector<Label> labels;
  labels.reserve(h.rows * h.cols);
  for (std::size_t r = 0; r < h.rows; ++r) {
    const std::size_t line_no = r + 2;
    if (r + 1 >= lines.size()) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(h.rows) + " rows, found " + std::to_string(r));
    }
    const std::string_view row = lines[r + 1];
    if (row.size() != h.cols) {
      throw ParseError(source, line_no,
                       "row length mismatch: expected " + std::to_string(h.cols) + ", found " +
                           std::to_string(row.size()));
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      const auto label = from_code<Label>(row[c]);
      if (!label) {
        throw ParseError(source, line_no,
                         "unknown class code '" + std::string(1, row[c]) + "' at column " +
                             std::to_string(c + 1));
      }
      labels.push_back(*label);
    }
  }
  for (std::size_t i = h.rows + 1; i < lines.size(); ++i) {
    if (!lines[i].empty()) {
      throw ParseError(source, i + 1, "unexpected content after the last grid row");
    }
  }
  return LabelGrid<Label>(std::move(slide_id), h.rows, h.cols, std::move(labels), h.patch_size_um);
}

template <typename Label>
void write_tlg(std::ostream& out, const LabelGrid<Label>& grid) {
  std::string text = "TLG v1 " + std::to_string(grid.rows()) + " " + std::to_string(grid.cols()) +
                     " " + format_patch_size(grid.patch_size_um()) + "\n";
  text.reserve(text.size() + grid.rows() * (grid.cols() + 1));
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    for (Label l : grid.row(r)) text.push_back(code_of(l));
    text.push_back('\n');
  }
  out << text;
}

template <typename Label>
LabelGrid<Label> load_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open grid file '" + path.string() + "'");
  return read_tlg<Label>(in, path.stem().string(), path.string());
}

template <typename Label>
void save_grid(const LabelGrid<Label>& grid, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_tlg(out, grid);
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

template LabelGrid<AnalysisClass> read_tlg(std::istream&, std::string, const std::string&);
template LabelGrid<AnnotationClass> read_tlg(std::istream&, std::string, const std::string&);
template void write_tlg(std::ostream&, const LabelGrid<AnalysisClass>&);
template void write_tlg(std::ostream&, const LabelGrid<AnnotationClass>&);
template LabelGrid<AnalysisClass> load_grid(const std::filesystem::path&);
template LabelGrid<AnnotationClass> load_grid(const std::filesystem::path&);
template void save_grid(const LabelGrid<AnalysisClass>&, const std::filesystem::path&);
template void save_grid(const LabelGrid<AnnotationClass>&, const std::filesystem::path&);

AnalysisGrid load_analysis_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open grid file '" + path.string() + "'");
  const std::string text = read_all(in);
  const std::size_t body = std::min(text.find('\n'), text.size());
  const bool annotation = text.find_first_of("KEAO", body) != std::string::npos;

  std::istringstream stream(text);
  if (annotation) {
    return map_to_analysis_classes(
        read_tlg<AnnotationClass>(stream, path.stem().string(), path.string()));
  }
  return read_tlg<AnalysisClass>(stream, path.stem().string(), path.string());
}

// ---- mapping ----------------------------------------------------------------

AnalysisGrid map_to_analysis_classes(const AnnotationGrid& grid) {
  std::vector<AnalysisClass> out;
  out.reserve(grid.size());
  for (AnnotationClass a : grid.labels()) out.push_back(to_analysis_class(a));
  return AnalysisGrid(grid.slide_id(), grid.rows(), grid.cols(), std::move(out),
                      grid.patch_size_um());
}

AnalysisGrid restrict_stroma_to_tumour_vicinity(const AnalysisGrid& grid,
                                                std::size_t max_distance) {
  const std::size_t rows = grid.rows();
  const std::size_t cols = grid.cols();

  // Chebyshev dilation of the tumour mask, done separably: rows then columns.
  std::vector<std::uint8_t> horiz(grid.size(), 0);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t last = std::numeric_limits<std::size_t>::max();
    for (std::size_t c = 0; c < cols; ++c) {
      if (grid.at(r, c) == AnalysisClass::Tumour) last = c;
      if (last != std::numeric_limits<std::size_t>::max() && c - last <= max_distance) {
        horiz[r * cols + c] = 1;
      }
    }
    last = std::numeric_limits<std::size_t>::max();
    for (std::size_t c = cols; c-- > 0;) {
      if (grid.at(r, c) == AnalysisClass::Tumour) last = c;
      if (last != std::numeric_limits<std::size_t>::max() && last - c <= max_distance) {
        horiz[r * cols + c] = 1;
      }
    }
  }
  std::vector<std::uint8_t> near(grid.size(), 0);
  for (std::size_t c = 0; c < cols; ++c) {
    std::size_t last = std::numeric_limits<std::size_t>::max();
    for (std::size_t r = 0; r < rows; ++r) {
      if (horiz[r * cols + c]) last = r;
      if (last != std::numeric_limits<std::size_t>::max() && r - last <= max_distance) {
        near[r * cols + c] = 1;
      }
    }
    last = std::numeric_limits<std::size_t>::max();
    for (std::size_t r = rows; r-- > 0;) {
      if (horiz[r * cols + c]) last = r;
      if (last != std::numeric_limits<std::size_t>::max() && last - r <= max_distance) {
        near[r * cols + c] = 1;
      }
    }
  }

  std::vector<AnalysisClass> out(grid.labels().begin(), grid.labels().end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] == AnalysisClass::TAS && !near[i]) out[i] = AnalysisClass::NonROI;
  }
  return AnalysisGrid(grid.slide_id(), rows, cols, std::move(out), grid.patch_size_um());
}

// ---- class statistics -------------------------------------------------------

ClassCounts class_counts(const AnalysisGrid& grid, simd::Backend backend) {
  simd::Histogram h{};
  simd::count_codes(grid.codes(), h, backend);
  return h;
}

ClassFractions class_fractions(const AnalysisGrid& grid, simd::Backend backend) {
  const ClassCounts counts = class_counts(grid, backend);
  const double n = static_cast<double>(grid.size());
  ClassFractions f{};
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = static_cast<double>(counts[i]) / n;
  return f;
}

// ---- confusion matrix -------------------------------------------------------

ConfusionMatrix::ConfusionMatrix(std::size_t classes) : k_(classes), counts_(classes * classes, 0) {
  if (classes == 0) throw DataError("confusion matrix needs at least one class");
}

ConfusionMatrix::ConfusionMatrix(std::size_t classes, std::vector<std::uint64_t> counts)
    : k_(classes), counts_(std::move(counts)) {
  if (classes == 0) throw DataError("confusion matrix needs at least one class");
  if (counts_.size() != k_ * k_) {
    throw DataError("confusion matrix: expected " + std::to_string(k_ * k_) + " entries");
  }
}

std::uint64_t ConfusionMatrix::total() const noexcept {
  std::uint64_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::trace() const noexcept {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < k_; ++i) t += at(i, i);
  return t;
}

bool ConfusionMatrix::is_diagonal() const noexcept {
  for (std::size_t i = 0; i < k_; ++i) {
    for (std::size_t j = 0; j < k_; ++j) {
      if (i != j && at(i, j) != 0) return false;
    }
  }
  return true;
}

template <typename Label>
ConfusionMatrix confusion_matrix(const LabelGrid<Label>& truth, const LabelGrid<Label>& pred) {
  if (!truth.same_shape(pred)) {
    throw DataError("confusion matrix: grid dimensions differ (" + std::to_string(truth.rows()) +
                    "x" + std::to_string(truth.cols()) + " vs " + std::to_string(pred.rows()) +
                    "x" + std::to_string(pred.cols()) + ")");
  }
  ConfusionMatrix cm(ClassTraits<Label>::kCount);
  const auto t = truth.labels();
  const auto p = pred.labels();
  for (std::size_t i = 0; i < t.size(); ++i) cm.add(index_of(t[i]), index_of(p[i]));
  return cm;
}

template ConfusionMatrix confusion_matrix(const AnalysisGrid&, const AnalysisGrid&);
template ConfusionMatrix confusion_matrix(const AnnotationGrid&, const AnnotationGrid&);

double accuracy(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw DataError("accuracy is undefined for an empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

double macro_f1(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw DataError("macro F1 is undefined for an empty confusion matrix");
  const std::size_t k = cm.classes();
  double sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    std::uint64_t row = 0;
    std::uint64_t col = 0;
    for (std::size_t j = 0; j < k; ++j) {
      row += cm.at(c, j);
      col += cm.at(j, c);
    }
    const std::uint64_t tp = cm.at(c, c);
    // F1 = 2TP / (2TP + FP + FN) = 2TP / (row + col); 0 when the class never occurs.
    if (row + col > 0) sum += 2.0 * static_cast<double>(tp) / static_cast<double>(row + col);
  }
  return sum / static_cast<double>(k);
}

}  // namespace tasil::grid
