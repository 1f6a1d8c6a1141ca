#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <utility>
#include <vector>

#include "edgetrack/error.hpp"
#include "edgetrack/image.hpp"
#include "edgetrack/wiremodel.hpp"

namespace edgetrack {

/// Line-segment detector tuning. gradient_threshold is the minimum usable
/// gradient magnitude (its default absorbs a quantization error bound of 2
/// gray levels at the default angle tolerance); min_length is applied at
/// full image resolution.
struct LsdParams {
  double scale = 0.8;
  double angle_tolerance = 22.5;   // degrees
  double gradient_threshold = 5.22;
  double nfa_epsilon = 1.0;        // max expected false detections
  double min_length = 15.0;        // px
};

namespace lsd_detail {

inline constexpr double kNotDef = -1024.0;
inline constexpr int kNBins = 1024;
inline constexpr double kSigmaScale = 0.6;
inline constexpr double kDensityTh = 0.7;

struct DImage {
  int w = 0, h = 0;
  std::vector<double> data;
  DImage() = default;
  DImage(int w_, int h_, double fill = 0.0) : w(w_), h(h_), data(static_cast<std::size_t>(w_) * h_, fill) {}
  double& at(int x, int y) { return data[static_cast<std::size_t>(y) * w + x]; }
  double at(int x, int y) const { return data[static_cast<std::size_t>(y) * w + x]; }
};

inline bool double_equal(double a, double b) {
  if (a == b) return true;
  const double abs_diff = std::abs(a - b);
  const double abs_max = std::max({std::abs(a), std::abs(b), DBL_MIN});
  return abs_diff / abs_max <= 100.0 * DBL_EPSILON;
}

inline double dist(double x1, double y1, double x2, double y2) {
  return std::sqrt((x2 - x1) * (x2 - x1) + (y2 - y1) * (y2 - y1));
}

inline void gaussian_kernel(std::vector<double>& kernel, double sigma, double mean) {
  double sum = 0.0;
  for (std::size_t i = 0; i < kernel.size(); ++i) {
    const double val = (static_cast<double>(i) - mean) / sigma;
    kernel[i] = std::exp(-0.5 * val * val);
    sum += kernel[i];
  }
  if (sum > 0.0)
    for (double& v : kernel) v /= sum;
}

/// Gaussian-filtered sub-sampling by `scale` < 1. Coordinate (0,0) is the
/// center of pixel (0,0); boundaries are handled by symmetric extension.
inline DImage gaussian_sampler(const DImage& in, double scale, double sigma_scale) {
  const int nw = static_cast<int>(std::ceil(in.w * scale));
  const int nh = static_cast<int>(std::ceil(in.h * scale));
  DImage aux(nw, in.h);
  DImage out(nw, nh);

  const double sigma = scale < 1.0 ? sigma_scale / scale : sigma_scale;
  // Kernel radius covering exp(-x^2/2) down to 1/10^3 of the peak.
  const int radius = static_cast<int>(std::ceil(sigma * std::sqrt(2.0 * 3.0 * std::log(10.0))));
  std::vector<double> kernel(static_cast<std::size_t>(1 + 2 * radius));

  const int double_w = 2 * in.w;
  const int double_h = 2 * in.h;

  for (int x = 0; x < aux.w; ++x) {
    const double xx = static_cast<double>(x) / scale;
    const int xc = static_cast<int>(std::floor(xx + 0.5));
    gaussian_kernel(kernel, sigma, static_cast<double>(radius) + xx - static_cast<double>(xc));
    for (int y = 0; y < aux.h; ++y) {
      double sum = 0.0;
      for (std::size_t i = 0; i < kernel.size(); ++i) {
        int j = xc - radius + static_cast<int>(i);
        while (j < 0) j += double_w;
        while (j >= double_w) j -= double_w;
        if (j >= in.w) j = double_w - 1 - j;
        sum += in.at(j, y) * kernel[i];
      }
      aux.at(x, y) = sum;
    }
  }

  for (int y = 0; y < out.h; ++y) {
    const double yy = static_cast<double>(y) / scale;
    const int yc = static_cast<int>(std::floor(yy + 0.5));
    gaussian_kernel(kernel, sigma, static_cast<double>(radius) + yy - static_cast<double>(yc));
    for (int x = 0; x < out.w; ++x) {
      double sum = 0.0;
      for (std::size_t i = 0; i < kernel.size(); ++i) {
        int j = yc - radius + static_cast<int>(i);
        while (j < 0) j += double_h;
        while (j >= double_h) j -= double_h;
        if (j >= in.h) j = double_h - 1 - j;
        sum += aux.at(x, j) * kernel[i];
      }
      out.at(x, y) = sum;
    }
  }
  return out;
}

/// Level-line angle (orthogonal to the gradient) per pixel from 2x2
/// differences, plus the gradient magnitude image and the seed list in
/// pseudo-descending magnitude order (1024-bin bucketing).
inline DImage ll_angle(const DImage& in, double threshold, DImage& modgrad,
                       std::vector<std::pair<int, int>>& ordered) {
  DImage g(in.w, in.h, kNotDef);
  modgrad = DImage(in.w, in.h, 0.0);
  double max_grad = 0.0;

  for (int x = 0; x < in.w - 1; ++x)
    for (int y = 0; y < in.h - 1; ++y) {
      const double com1 = in.at(x + 1, y + 1) - in.at(x, y);
      const double com2 = in.at(x + 1, y) - in.at(x, y + 1);
      const double gx = com1 + com2;
      const double gy = com1 - com2;
      const double norm = std::sqrt((gx * gx + gy * gy) / 4.0);
      modgrad.at(x, y) = norm;
      if (norm > threshold) {
        g.at(x, y) = std::atan2(gx, -gy);
        max_grad = std::max(max_grad, norm);
      }
    }

  ordered.clear();
  if (max_grad > 0.0) {
    std::vector<std::vector<std::pair<int, int>>> bins(kNBins);
    for (int x = 0; x < in.w - 1; ++x)
      for (int y = 0; y < in.h - 1; ++y) {
        int i = static_cast<int>(modgrad.at(x, y) * kNBins / max_grad);
        if (i >= kNBins) i = kNBins - 1;
        bins[i].emplace_back(x, y);
      }
    ordered.reserve(static_cast<std::size_t>(in.w) * in.h);
    for (int i = kNBins - 1; i >= 0; --i)
      ordered.insert(ordered.end(), bins[i].begin(), bins[i].end());
  }
  return g;
}

inline bool is_aligned(int x, int y, const DImage& angles, double theta, double prec) {
  const double a = angles.at(x, y);
  if (a == kNotDef) return false;
  theta -= a;
  if (theta < 0.0) theta = -theta;
  if (theta > 1.5 * M_PI) {
    theta -= 2.0 * M_PI;
    if (theta < 0.0) theta = -theta;
  }
  return theta <= prec;
}

inline double angle_diff(double a, double b) {
  a -= b;
  while (a <= -M_PI) a += 2.0 * M_PI;
  while (a > M_PI) a -= 2.0 * M_PI;
  return std::abs(a);
}

inline double angle_diff_signed(double a, double b) {
  a -= b;
  while (a <= -M_PI) a += 2.0 * M_PI;
  while (a > M_PI) a -= 2.0 * M_PI;
  return a;
}

inline double log_gamma_lanczos(double x) {
  static const double q[7] = {75122.6331530, 80916.6278952, 36308.2951477,
                              8687.24529705, 1168.92649479, 83.8676043424,
                              2.50662827511};
  double a = (x + 0.5) * std::log(x + 5.5) - (x + 5.5);
  double b = 0.0;
  for (int n = 0; n < 7; ++n) {
    a -= std::log(x + n);
    b += q[n] * std::pow(x, n);
  }
  return a + std::log(b);
}

inline double log_gamma_windschitl(double x) {
  return 0.918938533204673 + (x - 0.5) * std::log(x) - x +
         0.5 * x * std::log(x * std::sinh(1.0 / x) + 1.0 / (810.0 * std::pow(x, 6.0)));
}

inline double log_gamma(double x) {
  return x > 15.0 ? log_gamma_windschitl(x) : log_gamma_lanczos(x);
}

/// -log10 of the number of false alarms for k aligned points out of n:
/// NFA = NT * binomial_tail(n, k, p). The tail sum stops once the truncation
/// error is below 10% of the result.
inline double nfa(int n, int k, double p, double logNT) {
  if (n == 0 || k == 0) return -logNT;
  if (n == k) return -logNT - n * std::log10(p);

  const double p_term = p / (1.0 - p);
  const double log1term = log_gamma(n + 1.0) - log_gamma(k + 1.0) -
                          log_gamma(n - k + 1.0) + k * std::log(p) +
                          (n - k) * std::log(1.0 - p);
  double term = std::exp(log1term);
  if (double_equal(term, 0.0)) {
    if (static_cast<double>(k) > n * p) return -log1term / M_LN10 - logNT;
    return -logNT;
  }

  double bin_tail = term;
  for (int i = k + 1; i <= n; ++i) {
    const double bin_term = static_cast<double>(n - i + 1) / i;
    const double mult_term = bin_term * p_term;
    term *= mult_term;
    bin_tail += term;
    if (bin_term < 1.0) {
      const double err =
          term * ((1.0 - std::pow(mult_term, static_cast<double>(n - i + 1))) /
                      (1.0 - mult_term) - 1.0);
      if (err < 0.1 * std::abs(-std::log10(bin_tail) - logNT) * bin_tail) break;
    }
  }
  return -std::log10(bin_tail) - logNT;
}

struct Rect {
  double x1, y1, x2, y2;
  double width;
  double x, y;       // center
  double theta;
  double dx, dy;     // unit vector along the segment
  double prec;       // angle tolerance (radians)
  double p;          // alignment probability
};

/// Integer-pixel iterator over a rectangle, column by column.
struct RectIter {
  double vx[4], vy[4];
  double ys, ye;
  int x, y;

  static double inter_low(double x, double x1, double y1, double x2, double y2) {
    if (double_equal(x1, x2) && y1 < y2) return y1;
    if (double_equal(x1, x2) && y1 > y2) return y2;
    return y1 + (x - x1) * (y2 - y1) / (x2 - x1);
  }
  static double inter_hi(double x, double x1, double y1, double x2, double y2) {
    if (double_equal(x1, x2) && y1 < y2) return y2;
    if (double_equal(x1, x2) && y1 > y2) return y1;
    return y1 + (x - x1) * (y2 - y1) / (x2 - x1);
  }

  bool end() const { return static_cast<double>(x) > vx[2]; }

  void inc() {
    if (!end()) ++y;
    while (static_cast<double>(y) > ye && !end()) {
      ++x;
      if (end()) return;
      if (static_cast<double>(x) < vx[3])
        ys = inter_low(x, vx[0], vy[0], vx[3], vy[3]);
      else
        ys = inter_low(x, vx[3], vy[3], vx[2], vy[2]);
      if (static_cast<double>(x) < vx[1])
        ye = inter_hi(x, vx[0], vy[0], vx[1], vy[1]);
      else
        ye = inter_hi(x, vx[1], vy[1], vx[2], vy[2]);
      y = static_cast<int>(std::ceil(ys));
    }
  }

  explicit RectIter(const Rect& r) {
    double cx[4], cy[4];
    cx[0] = r.x1 - r.dy * r.width * 0.5;
    cy[0] = r.y1 + r.dx * r.width * 0.5;
    cx[1] = r.x2 - r.dy * r.width * 0.5;
    cy[1] = r.y2 + r.dx * r.width * 0.5;
    cx[2] = r.x2 + r.dy * r.width * 0.5;
    cy[2] = r.y2 - r.dx * r.width * 0.5;
    cx[3] = r.x1 + r.dy * r.width * 0.5;
    cy[3] = r.y1 - r.dx * r.width * 0.5;

    int offset;
    if (r.x1 < r.x2 && r.y1 <= r.y2) offset = 0;
    else if (r.x1 >= r.x2 && r.y1 < r.y2) offset = 1;
    else if (r.x1 > r.x2 && r.y1 >= r.y2) offset = 2;
    else offset = 3;
    for (int n = 0; n < 4; ++n) {
      vx[n] = cx[(offset + n) % 4];
      vy[n] = cy[(offset + n) % 4];
    }

    x = static_cast<int>(std::ceil(vx[0])) - 1;
    y = static_cast<int>(std::ceil(vy[0]));
    ys = ye = -DBL_MAX;
    inc();
  }
};

inline double rect_nfa(const Rect& rec, const DImage& angles, double logNT) {
  int pts = 0, alg = 0;
  for (RectIter it(rec); !it.end(); it.inc())
    if (it.x >= 0 && it.y >= 0 && it.x < angles.w && it.y < angles.h) {
      ++pts;
      if (is_aligned(it.x, it.y, angles, rec.theta, rec.prec)) ++alg;
    }
  return nfa(pts, alg, rec.p, logNT);
}

struct Pixel {
  int x, y;
};

/// Principal inertia axis of the region, gradient-weighted; flipped by pi if
/// needed to stay within prec of the region angle.
inline double get_theta(const std::vector<Pixel>& reg, int reg_size, double x,
                        double y, const DImage& modgrad, double reg_angle,
                        double prec) {
  double ixx = 0.0, iyy = 0.0, ixy = 0.0;
  for (int i = 0; i < reg_size; ++i) {
    const double weight = modgrad.at(reg[i].x, reg[i].y);
    ixx += (reg[i].y - y) * (reg[i].y - y) * weight;
    iyy += (reg[i].x - x) * (reg[i].x - x) * weight;
    ixy -= (reg[i].x - x) * (reg[i].y - y) * weight;
  }
  const double lambda =
      0.5 * (ixx + iyy - std::sqrt((ixx - iyy) * (ixx - iyy) + 4.0 * ixy * ixy));
  double theta = std::abs(ixx) > std::abs(iyy) ? std::atan2(lambda - ixx, ixy)
                                               : std::atan2(ixy, lambda - iyy);
  if (angle_diff(theta, reg_angle) > prec) theta += M_PI;
  return theta;
}

inline void region2rect(const std::vector<Pixel>& reg, int reg_size,
                        const DImage& modgrad, double reg_angle, double prec,
                        double p, Rect& rec) {
  double x = 0.0, y = 0.0, sum = 0.0;
  for (int i = 0; i < reg_size; ++i) {
    const double weight = modgrad.at(reg[i].x, reg[i].y);
    x += reg[i].x * weight;
    y += reg[i].y * weight;
    sum += weight;
  }
  x /= sum;
  y /= sum;

  const double theta = get_theta(reg, reg_size, x, y, modgrad, reg_angle, prec);
  const double dx = std::cos(theta);
  const double dy = std::sin(theta);
  double l_min = 0.0, l_max = 0.0, w_min = 0.0, w_max = 0.0;
  for (int i = 0; i < reg_size; ++i) {
    const double l = (reg[i].x - x) * dx + (reg[i].y - y) * dy;
    const double w = -(reg[i].x - x) * dy + (reg[i].y - y) * dx;
    l_max = std::max(l_max, l);
    l_min = std::min(l_min, l);
    w_max = std::max(w_max, w);
    w_min = std::min(w_min, w);
  }

  rec.x1 = x + l_min * dx;
  rec.y1 = y + l_min * dy;
  rec.x2 = x + l_max * dx;
  rec.y2 = y + l_max * dy;
  rec.width = std::max(w_max - w_min, 1.0);
  rec.x = x;
  rec.y = y;
  rec.theta = theta;
  rec.dx = dx;
  rec.dy = dy;
  rec.prec = prec;
  rec.p = p;
}

/// Grows a connected region of pixels whose level-line angle stays within
/// prec of the running region angle.
inline void region_grow(int x, int y, const DImage& angles,
                        std::vector<Pixel>& reg, int& reg_size,
                        double& reg_angle, std::vector<uint8_t>& used,
                        double prec) {
  reg_size = 1;
  reg[0] = {x, y};
  reg_angle = angles.at(x, y);
  double sumdx = std::cos(reg_angle);
  double sumdy = std::sin(reg_angle);
  used[static_cast<std::size_t>(y) * angles.w + x] = 1;

  for (int i = 0; i < reg_size; ++i)
    for (int xx = reg[i].x - 1; xx <= reg[i].x + 1; ++xx)
      for (int yy = reg[i].y - 1; yy <= reg[i].y + 1; ++yy)
        if (xx >= 0 && yy >= 0 && xx < angles.w && yy < angles.h &&
            !used[static_cast<std::size_t>(yy) * angles.w + xx] &&
            is_aligned(xx, yy, angles, reg_angle, prec)) {
          used[static_cast<std::size_t>(yy) * angles.w + xx] = 1;
          reg[reg_size++] = {xx, yy};
          sumdx += std::cos(angles.at(xx, yy));
          sumdy += std::sin(angles.at(xx, yy));
          reg_angle = std::atan2(sumdy, sumdx);
        }
}

/// Shrinks the region around its seed until the rectangle density reaches
/// density_th, or rejects it.
inline bool reduce_region_radius(std::vector<Pixel>& reg, int& reg_size,
                                 const DImage& modgrad, double reg_angle,
                                 double prec, double p, Rect& rec,
                                 std::vector<uint8_t>& used,
                                 double density_th) {
  double density = reg_size / (dist(rec.x1, rec.y1, rec.x2, rec.y2) * rec.width);
  if (density >= density_th) return true;

  const double xc = reg[0].x;
  const double yc = reg[0].y;
  double rad = std::max(dist(xc, yc, rec.x1, rec.y1), dist(xc, yc, rec.x2, rec.y2));

  while (density < density_th) {
    rad *= 0.75;
    for (int i = 0; i < reg_size; ++i)
      if (dist(xc, yc, reg[i].x, reg[i].y) > rad) {
        used[static_cast<std::size_t>(reg[i].y) * modgrad.w + reg[i].x] = 0;
        reg[i] = reg[reg_size - 1];
        --reg_size;
        --i;
      }
    if (reg_size < 2) return false;
    region2rect(reg, reg_size, modgrad, reg_angle, prec, p, rec);
    density = reg_size / (dist(rec.x1, rec.y1, rec.x2, rec.y2) * rec.width);
  }
  return true;
}

/// Low-density regions get one retry with an angle tolerance estimated from
/// the pixels near the seed, then a radius reduction.
inline bool refine(std::vector<Pixel>& reg, int& reg_size, const DImage& modgrad,
                   double reg_angle, double prec, double p, Rect& rec,
                   std::vector<uint8_t>& used, const DImage& angles,
                   double density_th) {
  double density = reg_size / (dist(rec.x1, rec.y1, rec.x2, rec.y2) * rec.width);
  if (density >= density_th) return true;

  const double xc = reg[0].x;
  const double yc = reg[0].y;
  const double ang_c = angles.at(reg[0].x, reg[0].y);
  double sum = 0.0, s_sum = 0.0;
  int n = 0;
  for (int i = 0; i < reg_size; ++i) {
    used[static_cast<std::size_t>(reg[i].y) * angles.w + reg[i].x] = 0;
    if (dist(xc, yc, reg[i].x, reg[i].y) < rec.width) {
      const double ang_d = angle_diff_signed(angles.at(reg[i].x, reg[i].y), ang_c);
      sum += ang_d;
      s_sum += ang_d * ang_d;
      ++n;
    }
  }
  const double mean_angle = sum / n;
  const double tau =
      2.0 * std::sqrt((s_sum - 2.0 * mean_angle * sum) / n + mean_angle * mean_angle);

  region_grow(reg[0].x, reg[0].y, angles, reg, reg_size, reg_angle, used, tau);
  if (reg_size < 2) return false;
  region2rect(reg, reg_size, modgrad, reg_angle, prec, p, rec);

  density = reg_size / (dist(rec.x1, rec.y1, rec.x2, rec.y2) * rec.width);
  if (density < density_th)
    return reduce_region_radius(reg, reg_size, modgrad, reg_angle, prec, p, rec,
                                used, density_th);
  return true;
}

/// Tries rectangle variations (finer angle tolerance, thinner width, shifted
/// sides) keeping the best NFA.
inline double rect_improve(Rect& rec, const DImage& angles, double logNT,
                           double log_eps) {
  constexpr double delta = 0.5;
  constexpr double delta_2 = delta * 0.5;

  double log_nfa = rect_nfa(rec, angles, logNT);
  if (log_nfa > log_eps) return log_nfa;

  Rect r = rec;
  for (int n = 0; n < 5; ++n) {
    r.p /= 2.0;
    r.prec = r.p * M_PI;
    const double log_nfa_new = rect_nfa(r, angles, logNT);
    if (log_nfa_new > log_nfa) {
      log_nfa = log_nfa_new;
      rec = r;
    }
  }
  if (log_nfa > log_eps) return log_nfa;

  r = rec;
  for (int n = 0; n < 5; ++n) {
    if (r.width - delta >= 0.5) {
      r.width -= delta;
      const double log_nfa_new = rect_nfa(r, angles, logNT);
      if (log_nfa_new > log_nfa) {
        rec = r;
        log_nfa = log_nfa_new;
      }
    }
  }
  if (log_nfa > log_eps) return log_nfa;

  r = rec;
  for (int n = 0; n < 5; ++n) {
    if (r.width - delta >= 0.5) {
      r.x1 += -r.dy * delta_2;
      r.y1 += r.dx * delta_2;
      r.x2 += -r.dy * delta_2;
      r.y2 += r.dx * delta_2;
      r.width -= delta;
      const double log_nfa_new = rect_nfa(r, angles, logNT);
      if (log_nfa_new > log_nfa) {
        rec = r;
        log_nfa = log_nfa_new;
      }
    }
  }
  if (log_nfa > log_eps) return log_nfa;

  r = rec;
  for (int n = 0; n < 5; ++n) {
    if (r.width - delta >= 0.5) {
      r.x1 -= -r.dy * delta_2;
      r.y1 -= r.dx * delta_2;
      r.x2 -= -r.dy * delta_2;
      r.y2 -= r.dx * delta_2;
      r.width -= delta;
      const double log_nfa_new = rect_nfa(r, angles, logNT);
      if (log_nfa_new > log_nfa) {
        rec = r;
        log_nfa = log_nfa_new;
      }
    }
  }
  if (log_nfa > log_eps) return log_nfa;

  r = rec;
  for (int n = 0; n < 5; ++n) {
    r.p /= 2.0;
    r.prec = r.p * M_PI;
    const double log_nfa_new = rect_nfa(r, angles, logNT);
    if (log_nfa_new > log_nfa) {
      log_nfa = log_nfa_new;
      rec = r;
    }
  }
  return log_nfa;
}

}  // namespace lsd_detail

/// Stable filter keeping segments of length >= min_length (inclusive).
inline std::vector<Segment2D> filter_by_length(const std::vector<Segment2D>& segments,
                                               double min_length) {
  std::vector<Segment2D> out;
  for (const Segment2D& s : segments)
    if (s.length >= min_length) out.push_back(s);
  return out;
}

/// Detects line segments: Gaussian down-scaling, level-line region growing
/// in pseudo-descending gradient order, gradient-weighted rectangle fit,
/// density refinement, and a-contrario (NFA) validation. Coordinates are
/// reported at full resolution; (0,0) is the corner of pixel (0,0). Output
/// is sorted by descending length and is deterministic.
inline std::vector<Segment2D> detect_segments(const GrayImage& img,
                                              const LsdParams& params = {}) {
  using namespace lsd_detail;

  if (params.scale <= 0.0 || params.scale > 1.0 ||
      params.angle_tolerance <= 0.0 || params.angle_tolerance >= 90.0 ||
      params.min_length < 0.0 || params.nfa_epsilon <= 0.0 ||
      params.gradient_threshold < 0.0)
    fail(ErrorCode::ParseError, "invalid detector parameters");

  const int sw = static_cast<int>(std::ceil(img.width * params.scale));
  const int sh = static_cast<int>(std::ceil(img.height * params.scale));
  if (sw < 8 || sh < 8)
    fail(ErrorCode::ImageTooSmall, "image smaller than 8x8 after scaling");

  DImage work(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      work.at(x, y) = static_cast<double>(img.at(x, y));

  const double prec = M_PI * params.angle_tolerance / 180.0;
  const double p = params.angle_tolerance / 180.0;
  const double log_eps = -std::log10(params.nfa_epsilon);

  DImage scaled = params.scale < 1.0
                      ? gaussian_sampler(work, params.scale, kSigmaScale)
                      : std::move(work);

  DImage modgrad;
  std::vector<std::pair<int, int>> ordered;
  const DImage angles = ll_angle(scaled, params.gradient_threshold, modgrad, ordered);

  const double logNT =
      2.5 * (std::log10(static_cast<double>(angles.w)) +
             std::log10(static_cast<double>(angles.h))) + std::log10(11.0);
  const int min_reg_size = static_cast<int>(-logNT / std::log10(p));

  std::vector<uint8_t> used(static_cast<std::size_t>(angles.w) * angles.h, 0);
  std::vector<Pixel> reg(static_cast<std::size_t>(angles.w) * angles.h);

  std::vector<Segment2D> out;
  for (const auto& [sx, sy] : ordered) {
    if (used[static_cast<std::size_t>(sy) * angles.w + sx] ||
        angles.at(sx, sy) == kNotDef)
      continue;

    int reg_size = 0;
    double reg_angle = 0.0;
    region_grow(sx, sy, angles, reg, reg_size, reg_angle, used, prec);
    if (reg_size < min_reg_size) continue;

    Rect rec;
    region2rect(reg, reg_size, modgrad, reg_angle, prec, p, rec);
    if (!refine(reg, reg_size, modgrad, reg_angle, prec, p, rec, used, angles,
                kDensityTh))
      continue;

    const double log_nfa = rect_improve(rec, angles, logNT, log_eps);
    if (log_nfa <= log_eps) continue;

    // The 2x2 gradient of block (x,y) refers to the block center, +0.5 in
    // pixel-index coordinates. Map back to full resolution in that frame,
    // then shift by another half pixel into the image frame used everywhere
    // else here, where pixel (i,j) spans [i,i+1) x [j,j+1).
    rec.x1 += 0.5;
    rec.y1 += 0.5;
    rec.x2 += 0.5;
    rec.y2 += 0.5;
    if (params.scale < 1.0) {
      rec.x1 /= params.scale;
      rec.y1 /= params.scale;
      rec.x2 /= params.scale;
      rec.y2 /= params.scale;
    }
    out.push_back(make_segment(Vec2(rec.x1 + 0.5, rec.y1 + 0.5),
                               Vec2(rec.x2 + 0.5, rec.y2 + 0.5)));
  }

  out = filter_by_length(out, params.min_length);
  std::stable_sort(out.begin(), out.end(),
                   [](const Segment2D& a, const Segment2D& b) { return a.length > b.length; });
  return out;
}

}  // namespace edgetrack
