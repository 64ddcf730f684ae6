#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "asrfeat/audio_io.hpp"
#include "asrfeat/matrix.hpp"

namespace asrfeat {

struct MfccConfig {
  int sample_rate_hz = kDefaultSampleRateHz;
  int frame_len = 512;
  int hop_len = 160;
  int n_mels = 40;
  int n_mfcc = 20;
  double fmin_hz = 0.0;
  // Non-positive means sample_rate_hz / 2.
  double fmax_hz = 0.0;
  double log_floor = 1e-10;

  int fft_size() const { return frame_len; }
  int n_bins() const { return frame_len / 2 + 1; }
  double resolved_fmax() const { return fmax_hz > 0.0 ? fmax_hz : sample_rate_hz / 2.0; }

  // Throws InvalidConfig when an invariant does not hold.
  void validate() const;
};

// n_mfcc x T, coefficient-major.
struct MfccSequence {
  Matrix coeffs;
  std::vector<double> frame_times_s;
  std::string utterance_id;

  std::size_t n_mfcc() const { return coeffs.rows(); }
  std::size_t frames() const { return coeffs.cols(); }
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Number of centered frames for a signal of num_samples samples.
std::size_t frame_count(std::size_t num_samples, int hop_len);

// T x frame_len matrix of centered frames. The signal is reflection padded by
// frame_len/2 on both sides (mirror without repeating the edge sample).
Matrix frame_signal(std::span<const double> samples, int frame_len, int hop_len);

// Periodic Hann window of length n.
std::vector<double> hann_window(int n);

// In-place iterative radix-2 FFT; data.size() must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& data);

// |DFT(window .* frame)|^2 for bins 0..n/2.
std::vector<double> power_spectrum(std::span<const double> frame, std::span<const double> window);

// n_mels x (fft_size/2+1) triangular filters on the HTK mel scale, unnormalized.
Matrix mel_filterbank(const MfccConfig& cfg);

// Orthonormal DCT-II basis, n_out x n_in (row k = basis vector k).
Matrix dct_ii_matrix(int n_in, int n_out);

// First n_out orthonormal DCT-II coefficients of v.
std::vector<double> dct_ii_ortho(std::span<const double> v, int n_out);

// Precomputes window, filterbank and DCT basis once; compute() is const and
// may be called concurrently.
class MfccExtractor {
 public:
  explicit MfccExtractor(const MfccConfig& cfg);

  const MfccConfig& config() const { return cfg_; }
  const Matrix& filterbank() const { return filterbank_; }

  MfccSequence compute(const AudioBuffer& buf, std::string utterance_id = {}) const;

 private:
  MfccConfig cfg_;
  std::vector<double> window_;
  Matrix filterbank_;
  std::vector<std::pair<int, int>> filter_support_;  // [first, last] nonzero bins per mel row
  Matrix dct_;
};

// Convenience wrapper that builds a one-off extractor.
MfccSequence compute_mfcc(const AudioBuffer& buf, const MfccConfig& cfg);

// Binary dump: "MFC1", u32 n_mfcc, u32 T (little-endian), then the
// n_mfcc x T matrix as row-major little-endian f32.
void write_mfcc_dump(const std::filesystem::path& path, const MfccSequence& seq);
MfccSequence read_mfcc_dump(const std::filesystem::path& path);

}  // namespace asrfeat
