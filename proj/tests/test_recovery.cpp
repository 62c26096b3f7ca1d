#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "masim/codec.hpp"
#include "masim/dictionary.hpp"
#include "masim/model.hpp"
#include "masim/recovery.hpp"

using namespace masim;
using namespace masim::model;
using namespace masim::recovery;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

namespace {

struct SmallSystem {
    int m, t, d, n;
    PrecodingSet ps;
    ChannelSet ch;
    MatrixXcd b;  // explicit dictionary

    SmallSystem(int m_, int t_, int d_, int n_, Rng& rng) : m(m_), t(t_), d(d_), n(n_) {
        // built by hand so square precoders (d = t) are allowed in oracles
        ps.frame_len = t;
        ps.block_len = d;
        for (int u = 0; u < n; ++u) {
            MatrixXcd p(t, d);
            for (int c = 0; c < d; ++c) {
                for (int r = 0; r < t; ++r) p(r, c) = rng.next_cgaussian();
                p.col(c) /= p.col(c).norm();
            }
            ps.users.push_back(std::move(p));
        }
        ch = draw_channels(m, n, rng);
        b.resize(m * t, n * d);
        for (int u = 0; u < n; ++u)
            b.middleCols(u * d, d) = kron_block(ps.users[u], ch.h.col(u));
    }

    MatrixXcd to_matrix(const VectorXcd& y_vec) const {
        return Eigen::Map<const MatrixXcd>(y_vec.data(), m, t);
    }
};

}  // namespace

TEST_CASE("block correlation equals the explicit Kronecker computation") {
    Rng rng(21);
    SmallSystem sys(2, 2, 2, 3, rng);
    Dictionary dict(sys.ps, sys.ch);

    VectorXcd r(sys.m * sys.t);
    for (int i = 0; i < r.size(); ++i) r[i] = rng.next_cgaussian();
    const MatrixXcd rm = sys.to_matrix(r);

    for (int u = 0; u < sys.n; ++u) {
        const double direct = (sys.b.middleCols(u * sys.d, sys.d).adjoint() * r).squaredNorm();
        const double hh = sys.ch.h.col(u).squaredNorm();
        CHECK(dict.correlate_block(rm, u, false) == doctest::Approx(direct).epsilon(1e-10));
        CHECK(dict.correlate_block(rm, u, true) ==
              doctest::Approx(direct / hh).epsilon(1e-10));
        const VectorXcd cv = dict.corr_vector(rm, u);
        const VectorXcd ref = sys.b.middleCols(u * sys.d, sys.d).adjoint() * r;
        CHECK((cv - ref).norm() < 1e-10);
    }
    CHECK(dict.correlate_block(MatrixXcd::Zero(sys.m, sys.t), 0, true) == 0.0);
}

TEST_CASE("noiseless single-user instances recover exactly") {
    // N=2, Na=1, M=1, T=2, d=1, K=1; both hypotheses
    for (int truth : {0, 1}) {
        Rng rng(30 + truth);
        SmallSystem sys(1, 2, 1, 2, rng);
        const double rho0 = 1.7;
        VectorXcd s = VectorXcd::Zero(2);
        s[truth] = cxd(0.6, -0.8);
        const VectorXcd y = std::sqrt(rho0) * sys.b * s;
        Dictionary dict(sys.ps, sys.ch);
        Recoverer ws(1, 2, 1, 1);
        const RecoveryResult res = ws.bomp(sys.to_matrix(y), dict, 1, true, rho0);
        REQUIRE(res.selected_order.size() == 1);
        CHECK(res.selected_order[0] == truth);
        CHECK(std::abs(res.estimates.at(truth)[0] - s[truth]) < 1e-9);
    }
}

TEST_CASE("zero measurement selects by tie-break order") {
    Rng rng(31);
    SmallSystem sys(2, 4, 1, 4, rng);
    Dictionary dict(sys.ps, sys.ch);
    Recoverer ws(2, 4, 1, 3);
    const RecoveryResult res =
        ws.bomp(MatrixXcd::Zero(2, 4), dict, 3, true, 1.0);
    CHECK(res.selected_order == std::vector<int>{0, 1, 2});
    for (const auto& [u, est] : res.estimates) CHECK(est.norm() == 0.0);
}

TEST_CASE("orthogonal effective blocks drive the residual to zero at K = Na") {
    // Disjoint precoder supports make the selected Gram block diagonal.
    const int m = 2, t = 6, d = 2, n = 3;
    Rng rng(32);
    PrecodingSet ps{t, d, {}};
    for (int u = 0; u < n; ++u) {
        MatrixXcd p = MatrixXcd::Zero(t, d);
        p(2 * u, 0) = 1.0;
        p(2 * u + 1, 1) = 1.0;
        ps.users.push_back(p);
    }
    ChannelSet ch = draw_channels(m, n, rng);
    MatrixXcd b(m * t, n * d);
    for (int u = 0; u < n; ++u) b.middleCols(u * d, d) = kron_block(ps.users[u], ch.h.col(u));

    VectorXcd s(n * d);
    for (int i = 0; i < s.size(); ++i) s[i] = rng.next_cgaussian();
    const double rho0 = 2.0;
    const VectorXcd y = std::sqrt(rho0) * b * s;

    Dictionary dict(ps, ch);
    Recoverer ws(m, t, d, n);
    const RecoveryResult res =
        ws.bomp(Eigen::Map<const MatrixXcd>(y.data(), m, t), dict, n, true, rho0);
    CHECK(res.residual_norms.back() <= 1e-8);
}

TEST_CASE("ls update matches a direct QR solve and the noise decomposition") {
    Rng rng(33);
    SmallSystem sys(2, 5, 2, 4, rng);
    const double rho0 = 3.1;
    const std::vector<int> selected{2, 0, 3};

    VectorXcd s_true = VectorXcd::Zero(sys.n * sys.d);
    MatrixXcd basis(sys.m * sys.t, selected.size() * sys.d);
    for (size_t i = 0; i < selected.size(); ++i) {
        for (int j = 0; j < sys.d; ++j)
            s_true[selected[i] * sys.d + j] = rng.next_cgaussian();
        basis.middleCols(i * sys.d, sys.d) =
            sys.b.middleCols(selected[i] * sys.d, sys.d);
    }
    VectorXcd z(sys.m * sys.t);
    for (int i = 0; i < z.size(); ++i) z[i] = rng.next_cgaussian();
    const VectorXcd y = std::sqrt(rho0) * sys.b * s_true + z;

    Dictionary dict(sys.ps, sys.ch);
    const auto est = ls_update(selected, sys.to_matrix(y), dict, rho0);

    // direct solve oracle
    const VectorXcd ref =
        (std::sqrt(rho0) * basis).colPivHouseholderQr().solve(y);
    for (size_t i = 0; i < selected.size(); ++i)
        CHECK((est.at(selected[i]) - ref.segment(i * sys.d, sys.d)).norm() < 1e-8);

    // s_hat = s + (B^H B)^{-1} B^H z / sqrt(rho0)
    const MatrixXcd gram = basis.adjoint() * basis;
    const VectorXcd noise_term = gram.llt().solve(basis.adjoint() * z) / std::sqrt(rho0);
    for (size_t i = 0; i < selected.size(); ++i) {
        VectorXcd expect = noise_term.segment(i * sys.d, sys.d);
        for (int j = 0; j < sys.d; ++j) expect[j] += s_true[selected[i] * sys.d + j];
        CHECK((est.at(selected[i]) - expect).norm() < 1e-9);
    }

    // noiseless consistency
    const VectorXcd y0 = std::sqrt(rho0) * sys.b * s_true;
    const auto est0 = ls_update(selected, sys.to_matrix(y0), dict, rho0);
    for (int u : selected) {
        VectorXcd truth(sys.d);
        for (int j = 0; j < sys.d; ++j) truth[j] = s_true[u * sys.d + j];
        CHECK((est0.at(u) - truth).norm() < 1e-9);
    }
}

TEST_CASE("residual stays orthogonal to the selected span and non-increasing") {
    Rng rng(34);
    SmallSystem sys(2, 8, 2, 4, rng);
    const double rho0 = 1.3;
    VectorXcd s = VectorXcd::Zero(sys.n * sys.d);
    for (int u : {0, 2})
        for (int j = 0; j < sys.d; ++j) s[u * sys.d + j] = rng.next_cgaussian();
    VectorXcd y = std::sqrt(rho0) * sys.b * s;
    for (int i = 0; i < y.size(); ++i) y[i] += 0.5 * rng.next_cgaussian();

    Dictionary dict(sys.ps, sys.ch);
    Recoverer ws(sys.m, sys.t, sys.d, 4);
    const RecoveryResult res = ws.bomp(sys.to_matrix(y), dict, 4, true, rho0);

    for (size_t k = 1; k < res.residual_norms.size(); ++k)
        CHECK(res.residual_norms[k] <= res.residual_norms[k - 1] + 1e-9);

    // rebuild the final residual and test orthogonality
    VectorXcd r = y;
    MatrixXcd basis(sys.m * sys.t, 0);
    for (int u : res.selected_order) {
        basis.conservativeResize(Eigen::NoChange, basis.cols() + sys.d);
        basis.rightCols(sys.d) = sys.b.middleCols(u * sys.d, sys.d);
    }
    VectorXcd stacked(res.selected_order.size() * sys.d);
    for (size_t i = 0; i < res.selected_order.size(); ++i)
        stacked.segment(i * sys.d, sys.d) = res.estimates.at(res.selected_order[i]);
    r -= std::sqrt(rho0) * basis * stacked;
    CHECK((basis.adjoint() * r).norm() <= 1e-8 * y.norm());
}

TEST_CASE("normalized selection is invariant to channel rescaling") {
    // Single active user: rescaling its channel rescales every correlation by
    // the same factor; plain correlation can be fooled by a boosted inactive
    // channel while the normalized rule is not.
    Rng rng(35);
    for (int rep = 0; rep < 10; ++rep) {
        SmallSystem sys(2, 6, 2, 4, rng);
        const int truth = static_cast<int>(rng.next_below(4));
        VectorXcd s = VectorXcd::Zero(sys.n * sys.d);
        for (int j = 0; j < sys.d; ++j) s[truth * sys.d + j] = rng.next_cgaussian();
        const double rho0 = 2.0;

        Dictionary dict(sys.ps, sys.ch);
        Recoverer ws(sys.m, sys.t, sys.d, 4);
        const VectorXcd y = std::sqrt(rho0) * sys.b * s;
        const auto base = ws.bomp(sys.to_matrix(y), dict, 1, true, rho0);

        const double alpha = 0.25 + 3.0 * rng.next_double();
        ChannelSet scaled = sys.ch;
        scaled.h.col(truth) *= alpha;
        scaled.sq_norms[truth] *= alpha * alpha;
        MatrixXcd b2 = sys.b;
        b2.middleCols(truth * sys.d, sys.d) *= alpha;
        const VectorXcd y2 = std::sqrt(rho0) * b2 * s;

        Dictionary dict2(sys.ps, scaled);
        const auto rescaled = ws.bomp(sys.to_matrix(y2), dict2, 1, true, rho0);
        CHECK(base.selected_order == rescaled.selected_order);
        CHECK(base.selected_order[0] == truth);
    }
}

TEST_CASE("plain correlation is fooled by a boosted inactive channel") {
    Rng rng(36);
    SmallSystem sys(2, 6, 2, 4, rng);
    const int truth = 1, decoy = 3;
    VectorXcd s = VectorXcd::Zero(sys.n * sys.d);
    for (int j = 0; j < sys.d; ++j) s[truth * sys.d + j] = rng.next_cgaussian();
    const double rho0 = 2.0;

    ChannelSet boosted = sys.ch;
    boosted.h.col(decoy) *= 40.0;
    boosted.sq_norms[decoy] *= 1600.0;
    MatrixXcd b2 = sys.b;
    b2.middleCols(decoy * sys.d, sys.d) *= 40.0;
    const VectorXcd y = std::sqrt(rho0) * b2 * s;  // decoy is inactive: y unchanged

    Dictionary dict(sys.ps, boosted);
    Recoverer ws(sys.m, sys.t, sys.d, 4);
    const auto norm = ws.bomp(sys.to_matrix(y), dict, 1, true, rho0);
    const auto plain = ws.bomp(sys.to_matrix(y), dict, 1, false, rho0);
    CHECK(norm.selected_order[0] == truth);
    CHECK(plain.selected_order[0] == decoy);
}

namespace {

// Coded single-user scenario at block length d = 124.
struct CodedScenario {
    PrecodingSet ps;
    ChannelSet ch;
    VectorXcd y_vec;
    BitVec info;
    int m = 4, t = 620, d = 124, n = 6;

    CodedScenario(double rho0, double noise_scale, Rng& rng, int active_user) {
        ps = generate_precoding_set(t, d, n, rng);
        ch = draw_channels(m, n, rng);
        info.resize(codec::kInfoBits);
        for (auto& b : info) b = rng.next_u64() >> 63;
        const VectorXcd sym =
            modulate_qpsk(codec::bch_encode(codec::crc16_append(info)));
        const MatrixXcd b_active = kron_block(ps.users[active_user], ch.h.col(active_user));
        y_vec = std::sqrt(rho0) * b_active * sym;
        for (int i = 0; i < y_vec.size(); ++i)
            y_vec[i] += noise_scale * rng.next_cgaussian();
    }
};

}  // namespace

TEST_CASE("icbomp cancels a clean block at the first iteration") {
    Rng rng(37);
    CodedScenario sc(2.0, 0.0, rng, 2);
    Dictionary dict(sc.ps, sc.ch);
    Recoverer ws(sc.m, sc.t, sc.d, 4);
    const RecoveryResult res =
        ws.icbomp(Eigen::Map<const MatrixXcd>(sc.y_vec.data(), sc.m, sc.t), dict, 4,
                  2.0, false);
    REQUIRE(!res.selected_order.empty());
    CHECK(res.selected_order[0] == 2);
    REQUIRE(res.cancelled_at.count(2) == 1);
    CHECK(res.cancelled_at.at(2) == 1);
    CHECK(res.decoded.at(2).status == codec::DecodeStatus::Clean);
    CHECK(res.blocks_updated_per_iteration[0] == 1);
    // spurious zero-residual picks fail the CRC gate and accumulate slowly
    for (size_t i = 1; i < res.blocks_updated_per_iteration.size(); ++i)
        CHECK(res.blocks_updated_per_iteration[i] <= static_cast<int>(i));
    // decoded info bits reproduce the payload
    CHECK(res.decoded.at(2).bits == sc.info);
}

TEST_CASE("icbomp bookkeeping invariant") {
    Rng rng(38);
    for (int rep = 0; rep < 4; ++rep) {
        CodedScenario sc(1.5, 1.0, rng, rep % 6);
        Dictionary dict(sc.ps, sc.ch);
        Recoverer ws(sc.m, sc.t, sc.d, 6);
        const RecoveryResult res =
            ws.icbomp(Eigen::Map<const MatrixXcd>(sc.y_vec.data(), sc.m, sc.t), dict, 6,
                      1.5, false);
        // every selection is either cancelled or carries a final estimate; no both
        int final_lambda = 0;
        for (int u : res.selected_order) {
            const bool cancelled = res.cancelled_at.count(u) == 1;
            REQUIRE(res.estimates.count(u) == 1);
            if (!cancelled) ++final_lambda;
            // never cancel without a CRC-passing decode
            if (cancelled) CHECK(res.decoded.at(u).ok());
        }
        CHECK(res.cancelled_at.size() + final_lambda == res.selected_order.size());
        // selections are distinct
        std::vector<int> sorted = res.selected_order;
        std::sort(sorted.begin(), sorted.end());
        CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    }
}

TEST_CASE("adaptive iteration extension stays within the measurement bound") {
    Rng rng(39);
    CodedScenario sc(2.0, 0.3, rng, 1);
    Dictionary dict(sc.ps, sc.ch);
    const int cap = sc.m * sc.t / sc.d;  // 20
    Recoverer ws(sc.m, sc.t, sc.d, cap);
    const RecoveryResult res =
        ws.icbomp(Eigen::Map<const MatrixXcd>(sc.y_vec.data(), sc.m, sc.t), dict, 6,
                  2.0, true);
    CHECK(res.iterations_run <= cap);
    CHECK(static_cast<int>(res.selected_order.size()) <= sc.n);
}

TEST_CASE("workspace dimension guards") {
    CHECK_THROWS_AS(Recoverer(2, 4, 2, 5), ConfigError);  // 5*2 > 2*4
    Rng rng(40);
    SmallSystem sys(2, 4, 2, 3, rng);
    Dictionary dict(sys.ps, sys.ch);
    Recoverer ws(2, 4, 2, 4);
    CHECK_THROWS_AS(ws.bomp(MatrixXcd::Zero(3, 4), dict, 2, true, 1.0), InputError);
}
