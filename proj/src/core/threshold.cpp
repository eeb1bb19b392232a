#include "osteo/imaging/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

#include "osteo/error.hpp"

namespace osteo::imaging {

namespace {

using boost::multiprecision::cpp_int;

// Prefix sums over the histogram: count and first moment (in bin units) of
// bins [0, b).
struct Moments {
  std::array<std::uint64_t, 257> count{};
  std::array<std::uint64_t, 257> sum{};

  explicit Moments(const Histogram& hist) {
    for (std::size_t b = 0; b < 256; ++b) {
      count[b + 1] = count[b] + hist[b];
      sum[b + 1] = sum[b] + hist[b] * b;
    }
  }
};

// Bins (lo, hi] in cut-point convention, i.e. [lo + 1, hi].
struct ClassSpan {
  std::uint64_t n;
  std::uint64_t s;
};

// Between-class variance up to the constants N and μ: Σ s_k² / n_k.
long double criterion(const std::vector<ClassSpan>& spans) {
  long double acc = 0.0L;
  for (const auto& c : spans) {
    acc += static_cast<long double>(c.s) * static_cast<long double>(c.s) / static_cast<long double>(c.n);
  }
  return acc;
}

// Exact three-way comparison of Σ s_k²/n_k between two partitions.
int compare_exact(const std::vector<ClassSpan>& a, const std::vector<ClassSpan>& b) {
  auto as_fraction = [](const std::vector<ClassSpan>& spans, cpp_int& num, cpp_int& den) {
    den = 1;
    for (const auto& c : spans) {
      den *= c.n;
    }
    num = 0;
    for (const auto& c : spans) {
      cpp_int term = cpp_int(c.s) * c.s;
      for (const auto& other : spans) {
        if (&other != &c) {
          term *= other.n;
        }
      }
      num += term;
    }
  };
  cpp_int na, da, nb, db;
  as_fraction(a, na, da);
  as_fraction(b, nb, db);
  const cpp_int lhs = na * db;
  const cpp_int rhs = nb * da;
  return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
}

class CutSearch {
 public:
  CutSearch(const Histogram& hist, int classes) : hist_(hist), m_(hist), classes_(classes) {}

  std::vector<int> run() {
    cuts_.assign(static_cast<std::size_t>(classes_ - 1), 0);
    recurse(0, -1);
    return best_cuts_;
  }

 private:
  ClassSpan span(int lo, int hi) const {
    // bins lo+1 .. hi inclusive
    const auto a = static_cast<std::size_t>(lo + 1);
    const auto b = static_cast<std::size_t>(hi + 1);
    return {m_.count[b] - m_.count[a], m_.sum[b] - m_.sum[a]};
  }

  void recurse(int depth, int prev) {
    const int remaining = classes_ - 1 - depth;
    if (remaining == 0) {
      evaluate();
      return;
    }
    // A cut on an empty bin gives the same partition as the cut on the
    // nearest occupied bin below it, which comes first, so only occupied
    // bins are tried.
    for (int t = prev + 1; t <= 255 - remaining; ++t) {
      if (hist_[static_cast<std::size_t>(t)] == 0) {
        continue;
      }
      cuts_[static_cast<std::size_t>(depth)] = t;
      recurse(depth + 1, t);
    }
  }

  void evaluate() {
    spans_.clear();
    int prev = -1;
    for (int t : cuts_) {
      spans_.push_back(span(prev, t));
      prev = t;
    }
    spans_.push_back(span(prev, 255));
    if (spans_.back().n == 0) {
      return;
    }
    const long double value = criterion(spans_);
    bool take = false;
    if (best_cuts_.empty()) {
      take = true;
    } else {
      const long double tol = 1e-12L * std::max(std::fabs(best_value_), 1.0L);
      if (value > best_value_ + tol) {
        take = true;
      } else if (value >= best_value_ - tol) {
        take = compare_exact(spans_, best_spans_) > 0;
      }
    }
    if (take) {
      best_value_ = value;
      best_cuts_ = cuts_;
      best_spans_ = spans_;
    }
  }

  const Histogram& hist_;
  Moments m_;
  int classes_;
  std::vector<int> cuts_;
  std::vector<ClassSpan> spans_;
  std::vector<int> best_cuts_;
  std::vector<ClassSpan> best_spans_;
  long double best_value_ = 0.0L;
};

}  // namespace

Histogram histogram256(const GrayImage& img) {
  Histogram hist{};
  for (double v : img.pixels()) {
    ++hist[static_cast<std::size_t>(GrayImage::bin_of(v))];
  }
  return hist;
}

std::vector<int> otsu_cut_points(const Histogram& hist, int classes) {
  require(classes >= 2 && classes <= 4, ErrorCode::InvalidParameter,
          "otsu class count must be in {2,3,4}, got " + std::to_string(classes));
  const auto occupied = std::count_if(hist.begin(), hist.end(), [](std::uint64_t c) { return c > 0; });
  require(occupied >= classes, ErrorCode::DegenerateHistogram,
          "histogram has " + std::to_string(occupied) + " occupied bins, need at least " + std::to_string(classes));
  return CutSearch(hist, classes).run();
}

OtsuResult otsu_threshold(const GrayImage& img) {
  const auto cuts = otsu_cut_points(histogram256(img), 2);
  const int t = cuts.front();
  BinaryMask mask(img.width(), img.height());
  for (std::size_t i = 0; i < img.size(); ++i) {
    mask.set(i, GrayImage::bin_of(img[i]) > t);
  }
  return {t, t / 255.0, std::move(mask)};
}

MultiOtsuResult multi_otsu(const GrayImage& img, int classes) {
  MultiOtsuResult out;
  out.threshold_bins = otsu_cut_points(histogram256(img), classes);
  for (int t : out.threshold_bins) {
    out.thresholds.push_back(t / 255.0);
  }
  out.class_map.width = img.width();
  out.class_map.height = img.height();
  out.class_map.classes = classes;
  out.class_map.classes_of.resize(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const int b = GrayImage::bin_of(img[i]);
    const auto cls = std::upper_bound(out.threshold_bins.begin(), out.threshold_bins.end(), b - 1) -
                     out.threshold_bins.begin();
    out.class_map.classes_of[i] = static_cast<std::uint8_t>(cls);
  }
  return out;
}

}  // namespace osteo::imaging
