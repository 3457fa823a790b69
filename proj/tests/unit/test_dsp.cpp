#include <doctest.h>

#include <numbers>

#include "helpers.hpp"
#include "spellattack/dsp.hpp"
#include "spellattack/error.hpp"

using namespace spellattack;
using namespace testing;

namespace {

MatrixXd sinusoid(double f, double fs, Index n, double phase = 0.0) {
    MatrixXd x(1, n);
    for (Index i = 0; i < n; ++i) x(0, i) = std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs + phase);
    return x;
}

}  // namespace

TEST_SUITE("dsp") {
    TEST_CASE("bandpass design responses") {
        const auto ssvep = dsp::design_bandpass({4, 7.0, 90.0, 250.0});
        CHECK(ssvep.is_stable());
        CHECK(ssvep.magnitude(40.0) >= 0.99);
        CHECK(ssvep.magnitude(2.0) <= 0.05);
        const auto p300 = dsp::design_bandpass({4, 0.1, 15.0, 240.0});
        CHECK(p300.is_stable());
        CHECK(p300.magnitude(30.0) <= 0.1);
        CHECK(ssvep.poles.size() == 8);
    }

    TEST_CASE("bandpass rejects invalid bands") {
        CHECK_THROWS_AS(dsp::design_bandpass({4, 100.0, 120.0, 200.0}), ParameterError);
        CHECK_THROWS_AS(dsp::design_bandpass({4, 20.0, 10.0, 200.0}), ParameterError);
        CHECK_THROWS_AS(dsp::design_bandpass({0, 1.0, 10.0, 200.0}), ParameterError);
    }

    TEST_CASE("filter of zeros is zero") {
        const auto c = dsp::design_bandpass({4, 7.0, 90.0, 250.0});
        CHECK(dsp::filter_rows(MatrixXd::Zero(3, 100), c).isZero(0.0));
    }

    TEST_CASE("impulse response matches the direct difference equation") {
        // direct form is ill-conditioned for very low cutoffs; 7-90 Hz at 250 Hz is not
        const auto c = dsp::design_bandpass({4, 7.0, 90.0, 250.0});
        const auto b = c.numerator();
        const auto a = c.denominator();
        const Index n = 400;
        MatrixXd x = MatrixXd::Zero(1, n);
        x(0, 0) = 1.0;
        const MatrixXd y = dsp::filter_rows(x, c);
        std::vector<long double> ref(n, 0.0L);
        for (Index i = 0; i < n; ++i) {
            long double acc = 0.0L;
            for (std::size_t k = 0; k < b.size(); ++k)
                if (i >= static_cast<Index>(k)) acc += b[k] * x(0, i - static_cast<Index>(k));
            for (std::size_t k = 1; k < a.size(); ++k)
                if (i >= static_cast<Index>(k)) acc -= a[k] * ref[i - k];
            ref[i] = acc / a[0];
        }
        double err = 0.0, scale = 0.0;
        for (Index i = 0; i < n; ++i) {
            err = std::max(err, static_cast<double>(std::abs(y(0, i) - ref[i])));
            scale = std::max(scale, static_cast<double>(std::abs(ref[i])));
        }
        CHECK(err <= 1e-9 * scale);
    }

    TEST_CASE("mid-band sinusoid keeps its amplitude") {
        const auto c = dsp::design_bandpass({4, 7.0, 90.0, 250.0});
        const MatrixXd y = dsp::filter_rows(sinusoid(30.0, 250.0, 2000), c);
        const double peak = y.rightCols(1000).cwiseAbs().maxCoeff();
        CHECK(peak == doctest::Approx(1.0).epsilon(0.02));
    }

    TEST_CASE("znorm") {
        MatrixXd x(1, 3);
        x << 1, 2, 3;
        const MatrixXd z = dsp::znorm_rows(x);
        CHECK(z(0, 0) == doctest::Approx(-1.224744871391589));
        CHECK(z(0, 1) == doctest::Approx(0.0));
        CHECK(z(0, 2) == doctest::Approx(1.224744871391589));
        CHECK((dsp::znorm_rows(z) - z).cwiseAbs().maxCoeff() <= 1e-12);
        MatrixXd c(1, 3);
        c << 5, 5, 5;
        CHECK_THROWS_AS(dsp::znorm_rows(c), DegenerateInputError);
    }

    TEST_CASE("extract_epoch and the SSVEP window") {
        Rng rng(3);
        const Signal s(random_matrix(2, 300, rng), 240.0);
        CHECK(dsp::extract_epoch(s, 0, 300).data() == s.data());
        CHECK(dsp::extract_epoch(s, 10, 144).n_samples() == 144);
        CHECK_THROWS_AS(dsp::extract_epoch(s, 200, 144), BoundsError);
        CHECK_THROWS_AS(dsp::extract_epoch(s, -1, 10), BoundsError);
        const auto w = dsp::ssvep_window(250.0);
        CHECK(w.start == 32);
        CHECK(w.length == 312);
    }

    TEST_CASE("band projection") {
        const MatrixXd in = sinusoid(50.0, 250.0, 500);
        CHECK((dsp::band_project_rows(in, 250.0, 7.0, 90.0) - in).cwiseAbs().maxCoeff() <= 1e-9);
        const MatrixXd low = sinusoid(2.0, 250.0, 500);
        CHECK(dsp::band_project_rows(low, 250.0, 7.0, 90.0).squaredNorm() <= 1e-9 * low.squaredNorm());
        Rng rng(4);
        const MatrixXd r = random_matrix(3, 257, rng);
        const MatrixXd p = dsp::band_project_rows(r, 250.0, 7.0, 90.0);
        CHECK((dsp::band_project_rows(p, 250.0, 7.0, 90.0) - p).cwiseAbs().maxCoeff() <= 1e-12);
        // orthogonal projection: residual is orthogonal to the image
        CHECK(std::abs((r - p).cwiseProduct(p).sum()) <= 1e-9 * r.squaredNorm());
    }

    TEST_CASE("amplitude spectrum") {
        const auto s = dsp::amplitude_spectrum(Signal(sinusoid(10.0, 250.0, 500), 250.0));
        Index k = 0;
        s.amplitude.row(0).maxCoeff(&k);
        CHECK(s.freqs[static_cast<std::size_t>(k)] == doctest::Approx(10.0));
        CHECK(s.amplitude.squaredNorm() == doctest::Approx(sinusoid(10.0, 250.0, 500).squaredNorm()));
        const auto dc = dsp::amplitude_spectrum(Signal(MatrixXd::Constant(1, 64, 2.0), 100.0));
        CHECK(dc.amplitude(0, 0) * dc.amplitude(0, 0) == doctest::Approx(256.0));
        CHECK(dc.amplitude.rightCols(dc.amplitude.cols() - 1).cwiseAbs().maxCoeff() <= 1e-9);
    }
}
