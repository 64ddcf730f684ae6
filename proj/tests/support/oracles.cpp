#include "oracles.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <atomic>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include <unistd.h>

namespace asrfeat::testing {

std::vector<double> naive_power_spectrum(std::span<const double> frame, std::span<const double> window) {
  const std::size_t n = frame.size();
  std::vector<double> out(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      // Reduce k*t modulo n before forming the angle to keep it accurate.
      const double ang = -2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
      re += window[t] * frame[t] * std::cos(ang);
      im += window[t] * frame[t] * std::sin(ang);
    }
    out[k] = re * re + im * im;
  }
  return out;
}

std::vector<double> naive_dct(std::span<const double> v, int n_out) {
  const auto n = static_cast<double>(v.size());
  std::vector<double> out(n_out);
  for (int k = 0; k < n_out; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      acc += v[i] * std::cos(std::numbers::pi / n * (static_cast<double>(i) + 0.5) * k);
    }
    out[k] = acc * (k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n));
  }
  return out;
}

std::vector<double> naive_idct(std::span<const double> c) {
  const auto n = static_cast<double>(c.size());
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    double acc = c[0] * std::sqrt(1.0 / n);
    for (std::size_t k = 1; k < c.size(); ++k) {
      acc += c[k] * std::sqrt(2.0 / n) * std::cos(std::numbers::pi / n * (static_cast<double>(i) + 0.5) * k);
    }
    out[i] = acc;
  }
  return out;
}

Matrix reference_mfcc(std::span<const double> samples, const MfccConfig& cfg) {
  const int n = cfg.frame_len;
  const int pad = n / 2;
  const auto len = static_cast<long>(samples.size());
  // padded signal, mirror without edge repetition (numpy "reflect")
  std::vector<double> padded(samples.size() + 2 * pad);
  for (long p = 0; p < static_cast<long>(padded.size()); ++p) {
    long i = p - pad;
    while (i < 0 || i >= len) {
      if (len == 1) {
        i = 0;
        break;
      }
      if (i < 0) i = -i;
      if (i >= len) i = 2 * (len - 1) - i;
    }
    padded[p] = samples[i];
  }
  const long frames = 1 + (len - 1) / cfg.hop_len;

  std::vector<double> window(n);
  for (int i = 0; i < n; ++i) window[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / n));

  const double fmax = cfg.fmax_hz > 0 ? cfg.fmax_hz : cfg.sample_rate_hz / 2.0;
  auto mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto inv_mel = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  std::vector<double> edge(cfg.n_mels + 2);
  for (int i = 0; i < cfg.n_mels + 2; ++i) {
    edge[i] = inv_mel(mel(cfg.fmin_hz) + (mel(fmax) - mel(cfg.fmin_hz)) * i / (cfg.n_mels + 1));
  }

  Matrix out(cfg.n_mfcc, frames);
  std::vector<double> frame(n);
  std::vector<double> logmel(cfg.n_mels);
  for (long t = 0; t < frames; ++t) {
    for (int i = 0; i < n; ++i) frame[i] = padded[t * cfg.hop_len + i];
    const auto power = naive_power_spectrum(frame, window);
    for (int m = 0; m < cfg.n_mels; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < power.size(); ++k) {
        const double f = static_cast<double>(k) * cfg.sample_rate_hz / n;
        double w = 0.0;
        if (f > edge[m] && f <= edge[m + 1]) {
          w = (f - edge[m]) / (edge[m + 1] - edge[m]);
        } else if (f > edge[m + 1] && f < edge[m + 2]) {
          w = (edge[m + 2] - f) / (edge[m + 2] - edge[m + 1]);
        }
        e += w * power[k];
      }
      logmel[m] = std::log(e > cfg.log_floor ? e : cfg.log_floor);
    }
    const auto c = naive_dct(logmel, cfg.n_mfcc);
    for (int k = 0; k < cfg.n_mfcc; ++k) out(k, t) = c[k];
  }
  return out;
}

Matrix naive_dilated_conv(const Matrix& x, const ConvWeights& w, int dilation) {
  const int frames = static_cast<int>(x.cols());
  const int pad = dilation * (w.kernel - 1) / 2;
  Matrix xpad(x.rows(), frames + 2 * pad, 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (int t = 0; t < frames; ++t) xpad(i, t + pad) = x(i, t);
  }
  Matrix out(w.out_channels, frames);
  for (int o = 0; o < w.out_channels; ++o) {
    for (int t = 0; t < frames; ++t) {
      double acc = w.bias[o];
      for (int i = 0; i < w.in_channels; ++i) {
        for (int j = 0; j < w.kernel; ++j) acc += w.at(o, i, j) * xpad(i, t + j * dilation);
      }
      out(o, t) = acc;
    }
  }
  return out;
}

std::pair<Matrix, Matrix> reference_gcu(const Matrix& x, const GcuLayerWeights& w, int dilation) {
  const Matrix f = naive_dilated_conv(x, w.filter, dilation);
  const Matrix g = naive_dilated_conv(x, w.gate, dilation);
  Matrix z(f.rows(), f.cols());
  for (std::size_t c = 0; c < f.rows(); ++c) {
    for (std::size_t t = 0; t < f.cols(); ++t) z(c, t) = std::tanh(f(c, t)) / (1.0 + std::exp(-g(c, t)));
  }
  Matrix next(x.rows(), x.cols());
  for (std::size_t o = 0; o < x.rows(); ++o) {
    for (std::size_t t = 0; t < x.cols(); ++t) {
      double acc = w.residual.bias[o];
      for (std::size_t i = 0; i < z.rows(); ++i) acc += w.residual.at(static_cast<int>(o), static_cast<int>(i), 0) * z(i, t);
      next(o, t) = x(o, t) + acc;
    }
  }
  return {z, next};
}

std::vector<long double> pinv_least_squares(const Matrix& x, std::span<const double> y) {
  using Mat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  const auto n = static_cast<Eigen::Index>(x.rows());
  const auto p = static_cast<Eigen::Index>(x.cols() + 1);
  Mat a(n, p);
  Vec b(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    a(r, 0) = 1.0L;
    for (Eigen::Index c = 1; c < p; ++c) a(r, c) = x(r, c - 1);
    b(r) = y[r];
  }
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const long double cutoff = s(0) * 1e-15L * static_cast<long double>(std::max(n, p));
  Vec utb = svd.matrixU().transpose() * b;
  for (Eigen::Index i = 0; i < s.size(); ++i) utb(i) = s(i) > cutoff ? utb(i) / s(i) : 0.0L;
  const Vec beta = svd.matrixV() * utb;
  return {beta.data(), beta.data() + beta.size()};
}

std::vector<double> sine(double freq_hz, double amplitude, double seconds, int rate, double phase) {
  const auto n = static_cast<std::size_t>(seconds * rate);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / rate + phase);
  }
  return out;
}

std::vector<double> white_noise(std::size_t n, double amplitude, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-amplitude, amplitude);
  std::vector<double> out(n);
  for (auto& v : out) v = dist(rng);
  return out;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> dist(0.0, scale);
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = dist(rng);
  return m;
}

ConvWeights random_conv(int out, int in, int k, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<float> dist(static_cast<float>(-scale), static_cast<float>(scale));
  ConvWeights w(out, in, k);
  for (auto& v : w.weight) v = dist(rng);
  for (auto& v : w.bias) v = dist(rng);
  return w;
}

void write_pcm16_raw(const std::filesystem::path& path, std::span<const std::int16_t> samples, int rate,
                     int channels) {
  std::ofstream out(path, std::ios::binary);
  auto u32 = [&](std::uint32_t v) {
    const char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                       static_cast<char>(v >> 24)};
    out.write(b, 4);
  };
  auto u16 = [&](std::uint16_t v) {
    const char b[2] = {static_cast<char>(v), static_cast<char>(v >> 8)};
    out.write(b, 2);
  };
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  out.write("RIFF", 4);
  u32(36 + data_bytes);
  out.write("WAVEfmt ", 8);
  u32(16);
  u16(1);
  u16(static_cast<std::uint16_t>(channels));
  u32(static_cast<std::uint32_t>(rate));
  u32(static_cast<std::uint32_t>(rate * channels * 2));
  u16(static_cast<std::uint16_t>(channels * 2));
  u16(16);
  out.write("data", 4);
  u32(data_bytes);
  for (std::int16_t s : samples) u16(static_cast<std::uint16_t>(s));
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("asrfeat_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace asrfeat::testing
