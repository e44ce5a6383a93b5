// Draws replicates of a small field, estimates the power spectrum at one
// degree from grid samples and compares with the model.
#include <cstdio>

#include "sphfield/sphfield.hpp"

int main() {
  using namespace sphfield;
  const auto model = make_powerlaw_model(12, 3, 1.0, 3.0, 2.0);
  const SphericalGrid grid(model.band_limit());
  const int ell = 5;
  const int replicates = 200;

  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(model.dim(), model.dim());
  for (int r = 0; r < replicates; ++r) {
    const auto field = synthesize_field(draw_coefficients(model, 42, static_cast<std::uint32_t>(r)), grid);
    mean += sample_power_spectrum(analyze_field(field, model.band_limit()), ell).op.entries() / replicates;
  }
  const auto truth = power_spectrum_operator(model, ell);
  std::printf("l = %d, %d replicates\n", ell, replicates);
  const double err = hilbert_schmidt_norm(OperatorOnH(mean) - truth);
  std::printf("  ||mean F_hat - F||_2^2 = %.3e  (expected %.3e)\n", err * err,
              mse_theoretical(model, ell) / replicates);
  std::printf("  ||F||_2^2              = %.3e\n", hilbert_schmidt_norm(truth) * hilbert_schmidt_norm(truth));
  return 0;
}
