#include "potkit/data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "potkit/rng.hpp"

namespace potkit {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

DistributionSpec DistributionSpec::gamma(double alpha, double beta) {
  DistributionSpec s;
  s.kind = DistKind::Gamma;
  s.p1 = alpha;
  s.p2 = beta;
  return s;
}

DistributionSpec DistributionSpec::poisson(double lambda) {
  DistributionSpec s;
  s.kind = DistKind::Poisson;
  s.p1 = lambda;
  return s;
}

DistributionSpec DistributionSpec::binomial(long n, double p) {
  DistributionSpec s;
  s.kind = DistKind::Binomial;
  s.p1 = static_cast<double>(n);
  s.p2 = p;
  return s;
}

DistributionSpec DistributionSpec::beta_dist(double alpha, double beta) {
  DistributionSpec s;
  s.kind = DistKind::Beta;
  s.p1 = alpha;
  s.p2 = beta;
  return s;
}

DistributionSpec DistributionSpec::mixed_gaussian(double mu1, double sigma1,
                                                  double mu2, double sigma2) {
  DistributionSpec s;
  s.kind = DistKind::MixedGaussian;
  s.p1 = mu1;
  s.p2 = sigma1;
  s.p3 = mu2;
  s.p4 = sigma2;
  return s;
}

std::string DistributionSpec::tag() const {
  switch (kind) {
    case DistKind::Gamma: return "G";
    case DistKind::Poisson: return "P";
    case DistKind::Binomial: return "Bi";
    case DistKind::Beta: return "Be";
    case DistKind::MixedGaussian: return "MG";
  }
  return "?";
}

namespace {

void validate(const DistributionSpec& spec) {
  if (spec.sample_count < 1 || spec.bin_count < 1) {
    throw ParameterError("DistributionSpec: need sample_count >= 1 and bin_count >= 1");
  }
  switch (spec.kind) {
    case DistKind::Gamma:
      if (!(spec.p1 > 0.0) || !(spec.p2 > 0.0)) throw ParameterError("gamma: bad parameters");
      break;
    case DistKind::Poisson:
      if (!(spec.p1 >= 0.0)) throw ParameterError("poisson: bad rate");
      break;
    case DistKind::Binomial:
      if (spec.p1 < 0.0 || !(spec.p2 >= 0.0 && spec.p2 <= 1.0)) {
        throw ParameterError("binomial: bad parameters");
      }
      break;
    case DistKind::Beta:
      if (!(spec.p1 > 0.0) || !(spec.p2 > 0.0)) throw ParameterError("beta: bad parameters");
      break;
    case DistKind::MixedGaussian:
      if (!(spec.p2 > 0.0) || !(spec.p4 > 0.0)) {
        throw ParameterError("mixed gaussian: standard deviations must be positive");
      }
      break;
  }
}

std::vector<double> draw_samples(const DistributionSpec& spec, Rng& rng) {
  validate(spec);
  std::vector<double> xs(spec.sample_count);
  for (double& x : xs) {
    switch (spec.kind) {
      case DistKind::Gamma:
        x = rng.gamma(spec.p1, spec.p2);
        break;
      case DistKind::Poisson:
        x = static_cast<double>(rng.poisson(spec.p1));
        break;
      case DistKind::Binomial:
        x = static_cast<double>(rng.binomial(static_cast<long>(spec.p1), spec.p2));
        break;
      case DistKind::Beta:
        x = rng.beta(spec.p1, spec.p2);
        break;
      case DistKind::MixedGaussian:
        x = rng.uniform01() < 0.5 ? rng.normal(spec.p1, spec.p2)
                                  : rng.normal(spec.p3, spec.p4);
        break;
    }
  }
  return xs;
}

MassVector bin_samples(const std::vector<double>& xs, std::size_t bins, double lo,
                       double hi) {
  std::vector<double> mass(bins, 0.0);
  const double inv_count = 1.0 / static_cast<double>(xs.size());
  if (!(hi > lo)) {
    // Zero-width range: single full bin plus zeros.
    mass[0] = 1.0;
    return MassVector(std::move(mass));
  }
  const double scale = static_cast<double>(bins) / (hi - lo);
  for (double x : xs) {
    auto idx = static_cast<long>((x - lo) * scale);
    idx = std::clamp<long>(idx, 0, static_cast<long>(bins) - 1);
    mass[static_cast<std::size_t>(idx)] += inv_count;
  }
  return MassVector(std::move(mass));
}

}  // namespace

MassVector sample_histogram(const DistributionSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  const auto xs = draw_samples(spec, rng);
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  return bin_samples(xs, spec.bin_count, *lo, *hi);
}

HistogramPair paired_histograms(const DistributionSpec& source,
                                const DistributionSpec& target, std::uint64_t seed) {
  if (source.bin_count != target.bin_count) {
    throw ParameterError("paired_histograms: bin counts must match");
  }
  SplitMix64 sm(seed);
  Rng rng_a(sm.next());
  Rng rng_b(sm.next());
  const auto xa = draw_samples(source, rng_a);
  const auto xb = draw_samples(target, rng_b);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double x : xa) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  for (double x : xb) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  HistogramPair pair{bin_samples(xa, source.bin_count, lo, hi),
                     bin_samples(xb, source.bin_count, lo, hi),
                     {}};
  pair.bin_centers.resize(source.bin_count);
  const double width = hi > lo ? (hi - lo) / static_cast<double>(source.bin_count) : 1.0;
  for (std::size_t k = 0; k < source.bin_count; ++k) {
    pair.bin_centers[k] = lo + (static_cast<double>(k) + 0.5) * width;
  }
  return pair;
}

MassVector smooth_and_normalize(const MassVector& h, double floor) {
  if (!(floor >= 0.0)) throw ParameterError("smooth_and_normalize: floor must be >= 0");
  std::vector<double> out(h.size());
  CompensatedSum total;
  for (std::size_t i = 0; i < h.size(); ++i) {
    out[i] = h[i] + floor;
    total.add(out[i]);
  }
  const double t = total.value();
  if (t <= 0.0) {
    throw DomainError("smooth_and_normalize: all-zero histogram with zero floor");
  }
  for (double& v : out) v /= t;
  return MassVector(std::move(out));
}

GrayscaleField to_field(const GrayImage& image) {
  GrayscaleField f;
  f.width = image.width;
  f.height = image.height;
  f.values.assign(image.pixels.begin(), image.pixels.end());
  return f;
}

GrayscaleField to_grayscale(const RgbImage& image) {
  GrayscaleField f;
  f.width = image.width;
  f.height = image.height;
  f.values.resize(image.width * image.height);
  for (std::size_t k = 0; k < f.values.size(); ++k) {
    const std::uint8_t* px = image.pixels.data() + 3 * k;
    f.values[k] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
  }
  return f;
}

namespace {

// Area overlap of source cell [p, p+1) with target block [a*len/t, (a+1)*len/t).
double overlap(double cell_lo, double cell_hi, double block_lo, double block_hi) {
  return std::max(0.0, std::min(cell_hi, block_hi) - std::max(cell_lo, block_lo));
}

}  // namespace

ImageHistogram image_to_histogram(const GrayscaleField& image, std::size_t target_side) {
  if (image.width == 0 || image.height == 0 ||
      image.values.size() != image.width * image.height) {
    throw ShapeError("image_to_histogram: empty or inconsistent image");
  }
  if (target_side < 1 || target_side > image.width || target_side > image.height) {
    throw ShapeError("image_to_histogram: need h, w >= target_side >= 1");
  }
  const auto t = static_cast<double>(target_side);
  const double row_step = static_cast<double>(image.height) / t;
  const double col_step = static_cast<double>(image.width) / t;

  std::vector<double> mass(target_side * target_side, 0.0);
  for (std::size_t a = 0; a < target_side; ++a) {
    const double r_lo = static_cast<double>(a) * row_step;
    const double r_hi = r_lo + row_step;
    const auto r_first = static_cast<std::size_t>(r_lo);
    const auto r_last = std::min(image.height - 1, static_cast<std::size_t>(std::ceil(r_hi) - 1));
    for (std::size_t b = 0; b < target_side; ++b) {
      const double c_lo = static_cast<double>(b) * col_step;
      const double c_hi = c_lo + col_step;
      const auto c_first = static_cast<std::size_t>(c_lo);
      const auto c_last = std::min(image.width - 1, static_cast<std::size_t>(std::ceil(c_hi) - 1));
      double acc = 0.0;
      for (std::size_t p = r_first; p <= r_last; ++p) {
        const double wr = overlap(static_cast<double>(p), static_cast<double>(p) + 1.0, r_lo, r_hi);
        if (wr <= 0.0) continue;
        for (std::size_t q = c_first; q <= c_last; ++q) {
          const double wc = overlap(static_cast<double>(q), static_cast<double>(q) + 1.0, c_lo, c_hi);
          if (wc <= 0.0) continue;
          acc += wr * wc * image.values[p * image.width + q];
        }
      }
      mass[a * target_side + b] = acc / (row_step * col_step);
    }
  }

  ImageHistogram out{smooth_and_normalize(MassVector(std::move(mass)), 1e-6), {}};
  out.positions.reserve(target_side * target_side);
  for (std::size_t a = 0; a < target_side; ++a) {
    for (std::size_t b = 0; b < target_side; ++b) {
      out.positions.push_back({static_cast<double>(a), static_cast<double>(b)});
    }
  }
  return out;
}

LuvHistogram rgb_to_luv_histogram(const RgbImage& image, std::size_t bins_per_axis) {
  if (bins_per_axis < 1) throw ParameterError("rgb_to_luv_histogram: bins_per_axis >= 1");
  if (image.width == 0 || image.height == 0 ||
      image.pixels.size() != 3 * image.width * image.height) {
    throw ShapeError("rgb_to_luv_histogram: empty or inconsistent image");
  }
  const std::size_t cells = bins_per_axis * bins_per_axis;
  std::vector<double> mass(cells, 0.0);
  const std::size_t count = image.width * image.height;
  const double inv_count = 1.0 / static_cast<double>(count);
  const auto bins = static_cast<long>(bins_per_axis);
  for (std::size_t k = 0; k < count; ++k) {
    const std::uint8_t* px = image.pixels.data() + 3 * k;
    const double l = static_cast<double>(px[0]) + px[1] + px[2];
    double u = 1.0 / 3.0, v = 1.0 / 3.0;  // achromatic point for L = 0
    if (l > 0.0) {
      u = px[1] / l;
      v = px[2] / l;
    }
    const auto ub = std::clamp<long>(static_cast<long>(u * static_cast<double>(bins)), 0, bins - 1);
    const auto vb = std::clamp<long>(static_cast<long>(v * static_cast<double>(bins)), 0, bins - 1);
    mass[static_cast<std::size_t>(ub * bins + vb)] += inv_count;
  }
  LuvHistogram out{smooth_and_normalize(MassVector(std::move(mass)), 1e-6), {}};
  out.bin_centers.reserve(cells);
  const double w = 1.0 / static_cast<double>(bins_per_axis);
  for (std::size_t iu = 0; iu < bins_per_axis; ++iu) {
    for (std::size_t iv = 0; iv < bins_per_axis; ++iv) {
      out.bin_centers.push_back(
          {(static_cast<double>(iu) + 0.5) * w, (static_cast<double>(iv) + 0.5) * w});
    }
  }
  return out;
}

PointCloud make_moons(std::size_t n_samples, double noise, std::uint64_t seed) {
  if (n_samples < 2) throw ParameterError("make_moons: need at least 2 samples");
  const std::size_t n_outer = n_samples - n_samples / 2;
  const std::size_t n_inner = n_samples / 2;
  Rng rng(seed);
  PointCloud cloud;
  cloud.points.reserve(n_samples);
  cloud.labels.reserve(n_samples);
  const auto arc = [](std::size_t k, std::size_t m) {
    return m > 1 ? kPi * static_cast<double>(k) / static_cast<double>(m - 1) : 0.0;
  };
  for (std::size_t k = 0; k < n_outer; ++k) {
    const double th = arc(k, n_outer);
    cloud.points.push_back({std::cos(th), std::sin(th)});
    cloud.labels.push_back(0);
  }
  for (std::size_t k = 0; k < n_inner; ++k) {
    const double th = arc(k, n_inner);
    cloud.points.push_back({1.0 - std::cos(th), 0.5 - std::sin(th)});
    cloud.labels.push_back(1);
  }
  if (noise > 0.0) {
    for (auto& p : cloud.points) {
      p[0] += rng.normal(0.0, noise);
      p[1] += rng.normal(0.0, noise);
    }
  }
  return cloud;
}

PointCloud rotate_cloud(const PointCloud& cloud, double degrees) {
  PointCloud out = cloud;
  if (cloud.points.empty()) return out;
  double cx = 0.0, cy = 0.0;
  for (const auto& p : cloud.points) {
    cx += p[0];
    cy += p[1];
  }
  cx /= static_cast<double>(cloud.points.size());
  cy /= static_cast<double>(cloud.points.size());
  const double rad = degrees * kPi / 180.0;
  const double cs = std::cos(rad), sn = std::sin(rad);
  for (auto& p : out.points) {
    const double x = p[0] - cx, y = p[1] - cy;
    p[0] = cx + cs * x - sn * y;
    p[1] = cy + sn * x + cs * y;
  }
  return out;
}

namespace {

double dist2(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1];
  return dx * dx + dy * dy;
}

}  // namespace

PointCloud kmeans_reduce(const PointCloud& cloud, std::size_t k, std::uint64_t seed,
                         std::vector<double>* sse_log) {
  const std::size_t n = cloud.points.size();
  if (k < 1 || k > n) throw ParameterError("kmeans_reduce: need 1 <= k <= #points");
  Rng rng(seed);

  // k-means++ seeding.
  std::vector<std::array<double, 2>> centroids;
  centroids.reserve(k);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  centroids.push_back(cloud.points[static_cast<std::size_t>(
      rng.uniform01() * static_cast<double>(n))]);
  for (std::size_t m = 1; m < k; ++m) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], dist2(cloud.points[i], centroids.back()));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform01() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = m % n;  // all remaining points coincide with chosen centroids
    }
    centroids.push_back(cloud.points[pick]);
  }

  std::vector<std::size_t> assign(n, 0);
  std::vector<std::size_t> count(k, 0);
  for (long iter = 0; iter < 300; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double bd = dist2(cloud.points[i], centroids[0]);
      for (std::size_t m = 1; m < k; ++m) {
        const double d = dist2(cloud.points[i], centroids[m]);
        if (d < bd) {
          bd = d;
          best = m;
        }
      }
      if (assign[i] != best || iter == 0) {
        if (assign[i] != best) changed = true;
        assign[i] = best;
      }
    }
    if (iter > 0 && !changed) break;

    std::fill(count.begin(), count.end(), 0);
    std::vector<std::array<double, 2>> sums(k, {0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) {
      sums[assign[i]][0] += cloud.points[i][0];
      sums[assign[i]][1] += cloud.points[i][1];
      ++count[assign[i]];
    }
    for (std::size_t m = 0; m < k; ++m) {
      if (count[m] > 0) {
        centroids[m] = {sums[m][0] / static_cast<double>(count[m]),
                        sums[m][1] / static_cast<double>(count[m])};
      }
    }

    if (sse_log) {
      double sse = 0.0;
      for (std::size_t i = 0; i < n; ++i) sse += dist2(cloud.points[i], centroids[assign[i]]);
      sse_log->push_back(sse);
    }

    // Re-seed empty clusters at the point farthest from its nearest centroid.
    // Unused centroids moving cannot increase any assigned distance, so the
    // logged objective stays nonincreasing.
    for (std::size_t m = 0; m < k; ++m) {
      if (count[m] > 0) continue;
      std::size_t far_idx = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = dist2(cloud.points[i], centroids[assign[i]]);
        if (d > far_d) {
          far_d = d;
          far_idx = i;
        }
      }
      centroids[m] = cloud.points[far_idx];
      count[m] = 1;  // claimed; keeps later empties from picking the same point
    }
  }

  PointCloud out;
  out.points = std::move(centroids);
  return out;
}

std::vector<std::vector<double>> as_positions(const PointCloud& cloud) {
  std::vector<std::vector<double>> out;
  out.reserve(cloud.points.size());
  for (const auto& p : cloud.points) out.push_back({p[0], p[1]});
  return out;
}

}  // namespace potkit
