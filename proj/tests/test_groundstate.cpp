#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nlsx/groundstate.hpp"
#include "oracles.hpp"

using namespace nlsx;

TEST_CASE("1D peaks match the closed-form profiles") {
  // Oracle values: profile_1d(p, w, 0), themselves checked in the next test
  // by substitution into the equation.
  struct Case {
    double p, w, peak;
  };
  for (const Case& c : {Case{3.0, 1.0, 1.4142135623730951},
                        Case{3.0, 4.0, 2.8284271247461903},
                        Case{2.0, 1.0, 1.5}}) {
    CHECK(std::abs(oracle::profile_1d(c.p, c.w, 0.0) - c.peak) < 1e-12);
    GroundState gs = solve_ground_state(c.p, 1, c.w);
    CHECK(std::abs(gs.peak() - c.peak) < 1e-5);
  }
}

TEST_CASE("closed-form oracle satisfies the equation to 1e-10") {
  const double dr = 1e-3;
  std::vector<double> q(20000);
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = oracle::profile_1d(3.0, 1.0, i * dr);
  // centered-difference residual of the analytic profile is O(dr^2) ~ 1e-7;
  // refine with Richardson by evaluating the ODE terms analytically instead:
  // -Q'' + Q - Q^3 with Q'' from the closed form.
  double worst = 0.0;
  for (double x = 0.0; x < 10.0; x += 0.01) {
    const double Q = oracle::profile_1d(3.0, 1.0, x);
    const double sech = 1.0 / std::cosh(x);
    const double Qpp = std::sqrt(2.0) * sech * (1.0 - 2.0 * sech * sech);  // (sqrt2 sech)''
    worst = std::max(worst, std::abs(-Qpp + Q - Q * Q * Q));
  }
  CHECK(worst < 1e-10);
  (void)q;
}

TEST_CASE("whole-profile match against the sech oracle") {
  GroundState gs = solve_ground_state(3.0, 1, 1.0);
  double worst = 0.0;
  for (double x = 0.0; x <= 12.0; x += 0.0173) {
    worst = std::max(worst, std::abs(eval_profile(gs, x) - oracle::profile_1d(3.0, 1.0, x)));
  }
  CHECK(worst / gs.peak() < 1e-6);
}

TEST_CASE("discrete residual below 1e-8 of the peak") {
  for (double p : {2.0, 3.0}) {
    for (double w : {0.5, 1.0, 4.0}) {
      GroundState gs = solve_ground_state(p, 1, w);
      const double res = oracle::residual_1d(p, w, gs.q_samples, gs.dr());
      CHECK(res <= 1e-8 * gs.peak());
    }
  }
}

TEST_CASE("2D solve: residual contract and monotone profile") {
  GroundState gs = solve_ground_state(2.0, 2, 1.0, -1.0, 8192);
  // recompute the radial residual with the same stencil the solver used
  const double dr = gs.dr();
  double worst = 0.0;
  for (int i = 1; i + 1 < gs.n_r; ++i) {
    const double r = gs.r_samples[i];
    const double lap = (gs.q_samples[i + 1] - 2.0 * gs.q_samples[i] + gs.q_samples[i - 1]) /
                           (dr * dr) +
                       (gs.q_samples[i + 1] - gs.q_samples[i - 1]) / (2.0 * dr * r);
    worst = std::max(worst, std::abs(-lap + gs.q_samples[i] - std::pow(gs.q_samples[i], 2.0)));
  }
  CHECK(worst <= 1e-8 * gs.peak());
  CHECK(gs.q_samples.front() > gs.q_samples.back());
}

TEST_CASE("scaling law across omega") {
  SECTION("1D to 1e-6 relative") {
    GroundState base = solve_ground_state(3.0, 1, 1.0);
    for (double w : {0.5, 2.0, 4.0}) {
      GroundState gs = solve_ground_state(3.0, 1, w);
      const double s = std::sqrt(w);
      double worst = 0.0;
      for (double x = 0.0; x <= 10.0 / s; x += 0.0151) {
        const double ref = std::sqrt(w) * eval_profile(base, s * x);  // w^{1/(p-1)} = sqrt(w)
        worst = std::max(worst, std::abs(eval_profile(gs, x) - ref));
      }
      CHECK(worst / gs.peak() < 1e-6);
    }
  }
  SECTION("2D to 1e-4 relative") {
    GroundState base = solve_ground_state(2.0, 2, 1.0, -1.0, 8192);
    for (double w : {0.5, 4.0}) {
      GroundState gs = solve_ground_state(2.0, 2, w, -1.0, 8192);
      const double s = std::sqrt(w);
      double worst = 0.0;
      for (double x = 0.0; x <= 10.0 / s; x += 0.0151) {
        const double ref = w * eval_profile(base, s * x);  // w^{1/(p-1)} = w for p = 2
        worst = std::max(worst, std::abs(eval_profile(gs, x) - ref));
      }
      CHECK(worst / gs.peak() < 1e-4);
    }
  }
}

TEST_CASE("mass scaling identity") {
  for (int d : {1, 2}) {
    const double p = 2.0;
    GroundState base = solve_ground_state(p, d, 1.0, -1.0, d == 1 ? 32768 : 8192);
    const double m1 = ground_state_mass(base);
    for (double w : {0.5, 2.0, 4.0}) {
      GroundState gs = solve_ground_state(p, d, w, -1.0, d == 1 ? 32768 : 8192);
      const double expect = std::pow(w, 2.0 / (p - 1.0) - d / 2.0) * m1;
      CHECK(std::abs(ground_state_mass(gs) - expect) < 1e-5 * expect);
    }
  }
}

TEST_CASE("d/domega of the mass: value and positivity") {
  GroundState gs = solve_ground_state_with_domega(3.0, 1, 1.0);
  // Oracle: int Q_w^2 = sqrt(w) * int Q_1^2 with int Q_1^2 = 4 by quadrature.
  const double mass1 = oracle::integrate([](double x) { return 2.0 / std::pow(std::cosh(x), 2.0); },
                                         0.0, 40.0) *
                       2.0;
  CHECK(std::abs(mass1 - 4.0) < 1e-9);
  const double dmass =
      radial_integral(gs, [&](double q, int i) { return 2.0 * q * gs.dq_domega_samples[i]; });
  CHECK(std::abs(dmass - 2.0) < 1e-3);

  for (int d : {1, 2}) {
    for (double w : {0.5, 2.0}) {
      GroundState g = solve_ground_state_with_domega(2.0, d, w, -1.0, d == 1 ? 16384 : 8192);
      const double dm =
          radial_integral(g, [&](double q, int i) { return 2.0 * q * g.dq_domega_samples[i]; });
      CHECK(dm > 0.0);
    }
  }
}

TEST_CASE("domega profile is radial-even and validates rel_step") {
  GroundState gs = solve_ground_state_with_domega(3.0, 1, 1.0);
  // evenness in x: zero slope at the origin of the radial representation
  CHECK(std::abs(gs.dq_domega_samples[1] - gs.dq_domega_samples[0]) <
        1e-4 * std::abs(gs.dq_domega_samples[0]));
  CHECK_THROWS_AS(domega_profile(gs, 1e-8), RelStepOutOfRange);
  CHECK_THROWS_AS(domega_profile(gs, 0.1), RelStepOutOfRange);
}

TEST_CASE("eval_profile endpoints and tail") {
  GroundState gs = solve_ground_state(3.0, 1, 1.0);
  CHECK(std::abs(eval_profile(gs, 0.0) - 1.4142135623730951) < 1e-5);
  CHECK(eval_profile(gs, gs.r_max) == gs.q_samples.back());
  CHECK(eval_profile(gs, 2.0 * gs.r_max) <= 1e-15 * gs.peak());
}

TEST_CASE("tail decay rate near sqrt(omega)") {
  for (double w : {0.5, 1.0, 4.0}) {
    GroundState gs = solve_ground_state(3.0, 1, w);
    CHECK(gs.decay_rate > 0.9 * std::sqrt(w));
    CHECK(gs.decay_rate < 1.1 * std::sqrt(w));
  }
}

TEST_CASE("precondition violations") {
  CHECK_THROWS_AS(solve_ground_state(3.0, 2, 1.0), SubcriticalityViolated);
  CHECK_THROWS_AS(solve_ground_state(5.001, 1, 1.0), SubcriticalityViolated);
  CHECK_THROWS_AS(solve_ground_state(3.0, 1, 1.0, 15.0), DomainTooSmall);
  CHECK_THROWS_AS(solve_ground_state(3.0, 1, 1.0, -1.0, 256), ConfigError);
  CHECK_THROWS_AS(solve_ground_state(3.0, 1, -1.0), ConfigError);
}

TEST_CASE("JSON round trip is bit exact") {
  GroundState gs = solve_ground_state_with_domega(2.0, 2, 0.5, -1.0, 1024);
  const json j = gs.to_json();
  GroundState back = GroundState::from_json(json::parse(j.dump()));
  REQUIRE(back.q_samples.size() == gs.q_samples.size());
  for (std::size_t i = 0; i < gs.q_samples.size(); ++i) {
    CHECK(back.q_samples[i] == gs.q_samples[i]);
    CHECK(back.dq_domega_samples[i] == gs.dq_domega_samples[i]);
  }
  CHECK(back.decay_rate == gs.decay_rate);
  CHECK(back.omega == gs.omega);
}
