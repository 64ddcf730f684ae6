#include "asrfeat/mfcc.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

#include "asrfeat/error.hpp"
#include "byte_io.hpp"
#include "file_util.hpp"

namespace asrfeat {
namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Mirror an out-of-range index back into [0, n) without repeating the edge.
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  i %= period;
  if (i < 0) i += period;
  if (i >= static_cast<std::ptrdiff_t>(n)) i = period - i;
  return static_cast<std::size_t>(i);
}

void invalid(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

}  // namespace

void MfccConfig::validate() const {
  if (sample_rate_hz <= 0) invalid("sample_rate_hz must be positive");
  if (!is_power_of_two(frame_len)) invalid("frame_len must be a power of two");
  if (hop_len <= 0 || hop_len > frame_len) invalid("hop_len must be in (0, frame_len]");
  if (n_mels <= 0) invalid("n_mels must be positive");
  if (n_mfcc <= 0 || n_mfcc > n_mels) invalid("n_mfcc must be in (0, n_mels]");
  if (fmin_hz < 0.0) invalid("fmin_hz must be non-negative");
  const double fmax = resolved_fmax();
  if (!(fmin_hz < fmax) || fmax > sample_rate_hz / 2.0) invalid("need fmin < fmax <= sample_rate/2");
  if (!(log_floor > 0.0)) invalid("log_floor must be positive");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::size_t frame_count(std::size_t num_samples, int hop_len) {
  if (num_samples == 0) return 0;
  return 1 + (num_samples - 1) / static_cast<std::size_t>(hop_len);
}

Matrix frame_signal(std::span<const double> samples, int frame_len, int hop_len) {
  if (frame_len <= 0 || hop_len <= 0) invalid("frame_len and hop_len must be positive");
  const std::size_t n = samples.size();
  const std::size_t frames = frame_count(n, hop_len);
  if (frames == 0) throw Error(ErrorCode::AudioTooShort, "no samples to frame");
  const std::ptrdiff_t pad = frame_len / 2;
  Matrix out(frames, static_cast<std::size_t>(frame_len));
  for (std::size_t t = 0; t < frames; ++t) {
    const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(t) * hop_len - pad;
    auto row = out.row(t);
    for (int j = 0; j < frame_len; ++j) {
      const std::ptrdiff_t i = start + j;
      row[j] = (i >= 0 && i < static_cast<std::ptrdiff_t>(n)) ? samples[i]
                                                             : samples[reflect_index(i, n)];
    }
  }
  return out;
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

void fft_radix2(std::vector<std::complex<double>>& data) {
  const std::size_t n = data.size();
  if (n == 0 || (n & (n - 1)) != 0) invalid("FFT size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  std::vector<std::complex<double>> twiddle(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    twiddle[k] = {std::cos(ang), std::sin(ang)};
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const std::complex<double> u = data[start + k];
        const std::complex<double> v = data[start + k + half] * twiddle[k * stride];
        data[start + k] = u + v;
        data[start + k + half] = u - v;
      }
    }
  }
}

std::vector<double> power_spectrum(std::span<const double> frame, std::span<const double> window) {
  if (frame.size() != window.size()) {
    throw Error(ErrorCode::ShapeMismatch, "frame and window lengths differ");
  }
  std::vector<std::complex<double>> buf(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = frame[i] * window[i];
  fft_radix2(buf);
  std::vector<double> out(frame.size() / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::norm(buf[k]);
  return out;
}

Matrix mel_filterbank(const MfccConfig& cfg) {
  cfg.validate();
  const int bins = cfg.n_bins();
  const double mel_lo = hz_to_mel(cfg.fmin_hz);
  const double mel_hi = hz_to_mel(cfg.resolved_fmax());
  std::vector<double> edges_hz(cfg.n_mels + 2);
  for (int i = 0; i < cfg.n_mels + 2; ++i) {
    edges_hz[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (cfg.n_mels + 1));
  }
  Matrix fb(cfg.n_mels, bins);
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double lo = edges_hz[m];
    const double center = edges_hz[m + 1];
    const double hi = edges_hz[m + 2];
    bool any = false;
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate_hz / cfg.fft_size();
      const double rise = (f - lo) / (center - lo);
      const double fall = (hi - f) / (hi - center);
      const double v = std::max(0.0, std::min(rise, fall));
      fb(m, k) = v;
      any = any || v > 0.0;
    }
    if (!any) {
      throw Error(ErrorCode::DegenerateFilter,
                  "mel filter " + std::to_string(m) + " covers no FFT bin; widen [fmin, fmax] or reduce n_mels");
    }
  }
  return fb;
}

Matrix dct_ii_matrix(int n_in, int n_out) {
  if (n_out > n_in || n_out <= 0) invalid("DCT needs 0 < n_out <= n_in");
  Matrix basis(n_out, n_in);
  const double s0 = std::sqrt(1.0 / n_in);
  const double sk = std::sqrt(2.0 / n_in);
  for (int k = 0; k < n_out; ++k) {
    for (int n = 0; n < n_in; ++n) {
      basis(k, n) = (k == 0 ? s0 : sk) * std::cos(std::numbers::pi * k * (2.0 * n + 1.0) / (2.0 * n_in));
    }
  }
  return basis;
}

std::vector<double> dct_ii_ortho(std::span<const double> v, int n_out) {
  const Matrix basis = dct_ii_matrix(static_cast<int>(v.size()), n_out);
  std::vector<double> out(n_out, 0.0);
  for (int k = 0; k < n_out; ++k) {
    const auto b = basis.row(k);
    double acc = 0.0;
    for (std::size_t n = 0; n < v.size(); ++n) acc += b[n] * v[n];
    out[k] = acc;
  }
  return out;
}

MfccExtractor::MfccExtractor(const MfccConfig& cfg)
    : cfg_(cfg), window_(hann_window(cfg.frame_len)), filterbank_(mel_filterbank(cfg)),
      dct_(dct_ii_matrix(cfg.n_mels, cfg.n_mfcc)) {
  filter_support_.reserve(cfg_.n_mels);
  for (int m = 0; m < cfg_.n_mels; ++m) {
    const auto row = filterbank_.row(m);
    int first = 0;
    int last = static_cast<int>(row.size()) - 1;
    while (row[first] == 0.0) ++first;
    while (row[last] == 0.0) --last;
    filter_support_.emplace_back(first, last);
  }
}

MfccSequence MfccExtractor::compute(const AudioBuffer& buf, std::string utterance_id) const {
  validate_rate(buf, cfg_.sample_rate_hz);
  for (double x : buf.samples) {
    if (!std::isfinite(x)) throw Error(ErrorCode::UnsupportedEncoding, buf.source_path + ": non-finite sample");
  }
  const Matrix frames = frame_signal(buf.samples, cfg_.frame_len, cfg_.hop_len);
  const std::size_t n_frames = frames.rows();

  MfccSequence seq;
  seq.utterance_id = std::move(utterance_id);
  seq.coeffs = Matrix(cfg_.n_mfcc, n_frames);
  seq.frame_times_s.resize(n_frames);

  std::vector<double> log_mel(cfg_.n_mels);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const std::vector<double> power = power_spectrum(frames.row(t), window_);
    for (int m = 0; m < cfg_.n_mels; ++m) {
      const auto weights = filterbank_.row(m);
      const auto [first, last] = filter_support_[m];
      double energy = 0.0;
      for (int k = first; k <= last; ++k) energy += weights[k] * power[k];
      log_mel[m] = std::log(std::max(energy, cfg_.log_floor));
    }
    for (int c = 0; c < cfg_.n_mfcc; ++c) {
      const auto basis = dct_.row(c);
      double acc = 0.0;
      for (int m = 0; m < cfg_.n_mels; ++m) acc += basis[m] * log_mel[m];
      seq.coeffs(c, t) = acc;
    }
    seq.frame_times_s[t] = static_cast<double>(t) * cfg_.hop_len / cfg_.sample_rate_hz;
  }
  return seq;
}

MfccSequence compute_mfcc(const AudioBuffer& buf, const MfccConfig& cfg) {
  return MfccExtractor(cfg).compute(buf);
}

void write_mfcc_dump(const std::filesystem::path& path, const MfccSequence& seq) {
  detail::ByteWriter w;
  w.tag("MFC1");
  w.u32(static_cast<std::uint32_t>(seq.n_mfcc()));
  w.u32(static_cast<std::uint32_t>(seq.frames()));
  for (double v : seq.coeffs.data()) w.f32(static_cast<float>(v));
  detail::write_file_bytes(path, w.bytes());
}

MfccSequence read_mfcc_dump(const std::filesystem::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  if (bytes.size() < 12) throw Error(ErrorCode::TruncatedFile, path.string());
  if (std::memcmp(bytes.data(), "MFC1", 4) != 0) throw Error(ErrorCode::BadMagic, path.string());
  const std::size_t rows = detail::load_u32(bytes.data() + 4);
  const std::size_t cols = detail::load_u32(bytes.data() + 8);
  if (bytes.size() != 12 + rows * cols * 4) throw Error(ErrorCode::TruncatedFile, path.string());
  MfccSequence seq;
  seq.coeffs = Matrix(rows, cols);
  for (std::size_t i = 0; i < rows * cols; ++i) seq.coeffs.data()[i] = detail::load_f32(bytes.data() + 12 + 4 * i);
  seq.utterance_id = path.stem().string();
  return seq;
}

}  // namespace asrfeat
