#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "potkit/image.hpp"
#include "potkit/types.hpp"

namespace potkit {

enum class DistKind { Gamma, Poisson, Binomial, Beta, MixedGaussian };

// A sampled toy distribution plus its histogram geometry.
struct DistributionSpec {
  DistKind kind = DistKind::Gamma;
  double p1 = 0.0, p2 = 0.0, p3 = 0.0, p4 = 0.0;
  std::size_t sample_count = 100000;
  std::size_t bin_count = 100;

  static DistributionSpec gamma(double alpha = 7.0, double beta = 1.0);
  static DistributionSpec poisson(double lambda = 5.0);
  static DistributionSpec binomial(long n = 10, double p = 0.4);
  static DistributionSpec beta_dist(double alpha = 2.0, double beta = 2.0);
  // Equal-weight two-component normal mixture.
  static DistributionSpec mixed_gaussian(double mu1 = 1.0, double sigma1 = 2.0,
                                         double mu2 = 10.0, double sigma2 = 1.5);

  // Short tag used in file names and CSV rows (G, P, Bi, Be, MG).
  std::string tag() const;
};

struct PointCloud {
  std::vector<std::array<double, 2>> points;
  std::vector<int> labels;  // empty when unlabeled
};

// Draw sample_count values and bin them over [min sample, max sample]; the
// result always has total mass 1. A zero-width sample range degenerates to a
// single full bin.
MassVector sample_histogram(const DistributionSpec& spec, std::uint64_t seed);

// Source/target histograms binned over the union of both sample ranges so bin
// i means the same value on both sides, plus the shared bin centers.
struct HistogramPair {
  MassVector r;
  MassVector c;
  std::vector<double> bin_centers;
};
HistogramPair paired_histograms(const DistributionSpec& source,
                                const DistributionSpec& target, std::uint64_t seed);

// h + floor on every bin, rescaled to total mass 1.
MassVector smooth_and_normalize(const MassVector& h, double floor);

// Real-valued grayscale field in [0, 255]; images convert into this before
// histogramming so block averages keep fractional precision.
struct GrayscaleField {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;  // row-major
};

GrayscaleField to_field(const GrayImage& image);
// Rec. 601 luminance: 0.299 R + 0.587 G + 0.114 B.
GrayscaleField to_grayscale(const RgbImage& image);

// Block-average to target_side x target_side (area-weighted fractional
// blocks), flatten row-major, smooth with 1e-6 and normalize. Positions are
// the (row, col) coordinates of the target grid for the position cost.
struct ImageHistogram {
  MassVector mass;
  std::vector<std::vector<double>> positions;
};
ImageHistogram image_to_histogram(const GrayscaleField& image, std::size_t target_side);

// Joint 2-D chromaticity histogram: per pixel L = R+G+B, U = G/L, V = B/L
// (U = V = 1/3 when L = 0), binned over [0,1]^2, smoothed with 1e-6 and
// normalized. bin_centers are the UV cell centers for the bin-value cost.
struct LuvHistogram {
  MassVector mass;
  std::vector<std::vector<double>> bin_centers;
};
LuvHistogram rgb_to_luv_histogram(const RgbImage& image, std::size_t bins_per_axis);

// Two interleaving half circles with isotropic Gaussian noise; equal class
// counts (the extra point goes to class 0 when n is odd).
PointCloud make_moons(std::size_t n_samples, double noise, std::uint64_t seed);

// Rotate every point about the cloud centroid; labels are preserved.
PointCloud rotate_cloud(const PointCloud& cloud, double degrees);

// Lloyd's algorithm with k-means++ seeding. Empty clusters are re-seeded at
// the point farthest from its nearest centroid. Returns the k centroids,
// unlabeled. When sse_log is given, the within-cluster sum of squares is
// appended once per Lloyd iteration.
PointCloud kmeans_reduce(const PointCloud& cloud, std::size_t k, std::uint64_t seed,
                         std::vector<double>* sse_log = nullptr);

std::vector<std::vector<double>> as_positions(const PointCloud& cloud);

}  // namespace potkit
