import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import rel_l2
from qgflow.dynamics import TrajectoryRecord
from qgflow.errors import DomainError, InsufficientDataError, StructuralError
from qgflow.fields import random_annulus, single_mode
from qgflow.littlewood_paley import (
    BesovIndex,
    besov_norm,
    build_frame,
    decompose,
    dyadic_block,
    eta,
    low_freq_cutoff,
    paraproduct_split,
    tilde_besov_norm,
)
from qgflow.spectral import Grid2D, PhysicalParams, SpectralField, dealiased_product, fractional_semigroup, lp_norm


class TestProfile:
    def test_flat_and_zero_regions(self):
        assert np.all(eta(np.linspace(0, 0.75, 20)) == 1.0)
        assert np.all(eta(np.linspace(1.0, 5, 20)) == 0.0)

    def test_monotone_bridge(self):
        r = np.linspace(0.75, 1.0, 200)
        assert np.all(np.diff(eta(r)) <= 0)


class TestFrame:
    def test_range_n64(self, frame64):
        assert (frame64.j_min, frame64.j_max) == (0, 5)

    def test_partition_at_3_0(self, frame64, grid64):
        total = frame64.chi_mask + sum(frame64.psi_masks.values())
        assert total[3, 0] == pytest.approx(1.0, abs=1e-12)

    def test_psi0_vanishes_at_4_5(self):
        psi0 = eta(np.array(4.5) / 2) - eta(np.array(4.5))
        assert psi0 == 0.0

    def test_partition_everywhere(self, frame64, grid64):
        total = frame64.chi_mask + sum(frame64.psi_masks.values())
        sel = grid64.retained & (grid64.xi_abs > 0)
        assert np.abs(total[sel] - 1).max() <= 1e-12

    def test_annulus_support(self, frame64, grid64):
        r = grid64.xi_abs
        for j, m in frame64.psi_masks.items():
            on = m > 0
            assert r[on].min() >= 2.0 ** (j - 1) and r[on].max() <= 2.0 ** (j + 1)

    def test_adjacent_overlap_only(self, frame64):
        for j in frame64.levels:
            for k in frame64.levels:
                if abs(j - k) >= 2:
                    assert np.all(frame64.psi_masks[j] * frame64.psi_masks[k] == 0)

    def test_smallest_grid_hosts_three_levels(self):
        fr = build_frame(Grid2D(8))
        assert len(fr.levels) == 3

    def test_too_small_grid(self):
        with pytest.raises(StructuralError):
            build_frame(Grid2D(4))

    def test_large_box_levels_start_negative(self):
        fr = build_frame(Grid2D(64, 64.0))
        assert fr.j_min == math.floor(math.log2(2 * math.pi / 64))

    def test_masks_are_read_only(self, frame64):
        with pytest.raises(ValueError):
            frame64.psi_masks[0][0, 0] = 3.0

    def test_csv_export(self, frame64):
        rows = list(csv.reader(io.StringIO(frame64.to_csv())))
        assert rows[0] == ["j", "xi_abs", "mask"]
        levels = {r[0] for r in rows[1:]}
        assert levels == {"chi"} | {str(j) for j in frame64.levels}


class TestBlocks:
    def test_unit_mode_in_block_zero(self, grid64, frame64):
        f = single_mode(grid64, 1, 0)
        assert rel_l2(dyadic_block(f, 0, frame64), f) <= 1e-15

    def test_mode_8_outside_block_zero(self, grid64, frame64):
        assert dyadic_block(single_mode(grid64, 8, 0), 0, frame64).l2() == 0

    def test_reconstruction(self, grid64, frame64):
        f = random_annulus(grid64, 1, 30, seed=1)
        total = low_freq_cutoff(f, frame64.j_min, frame64)
        for b in decompose(f, frame64).values():
            total = total + b
        assert rel_l2(total, f) <= 1e-10

    def test_out_of_range(self, grid64, frame64):
        with pytest.raises(DomainError):
            dyadic_block(single_mode(grid64, 1, 0), 9, frame64)
        with pytest.raises(DomainError):
            low_freq_cutoff(single_mode(grid64, 1, 0), -3, frame64)

    def test_full_cutoff(self, grid64, frame64):
        f = random_annulus(grid64, 1, 30, seed=2)
        assert rel_l2(low_freq_cutoff(f, frame64.j_max + 1, frame64), f) <= 1e-15

    def test_cutoff_kills_mode_8(self, grid64, frame64):
        assert low_freq_cutoff(single_mode(grid64, 8, 0), 0, frame64).l2() == 0

    @given(seed=st.integers(0, 10**6))
    @settings(max_examples=10, deadline=None)
    def test_telescoping(self, seed):
        g = Grid2D(64)
        fr = build_frame(g)
        f = random_annulus(g, 1, 30, seed=seed)
        for j in fr.levels:
            lhs = low_freq_cutoff(f, j + 1, fr)
            rhs = low_freq_cutoff(f, j, fr) + dyadic_block(f, j, fr)
            assert (lhs - rhs).l2() <= 1e-12 * f.l2()


class TestBesov:
    def test_single_mode_matches_l2(self, grid64, frame64):
        f = single_mode(grid64, 1, 0)
        assert besov_norm(f, BesovIndex(0, 2, 2), frame64) == pytest.approx(lp_norm(f, 2), rel=0.01)

    def test_zero(self, grid64, frame64):
        assert besov_norm(SpectralField.zeros(grid64), BesovIndex(0.5), frame64) == 0

    @pytest.mark.parametrize("idx", [BesovIndex(0.5, 2, 2), BesovIndex(1.0, 4, 1), BesovIndex(-0.3, 3, math.inf)])
    def test_homogeneity(self, grid64, frame64, idx):
        f = random_annulus(grid64, 1, 30, seed=3)
        assert besov_norm(f * 2.0, idx, frame64) == pytest.approx(2 * besov_norm(f, idx, frame64), rel=1e-14)

    def test_bad_index(self):
        with pytest.raises(DomainError):
            BesovIndex(0.0, 0.5, 2)


class TestTildeNorm:
    def _const(self, f, T=2.0, m=9):
        return TrajectoryRecord(np.linspace(0, T, m), [f] * m)

    def test_constant_sup(self, grid64, frame64):
        f = random_annulus(grid64, 1, 20, seed=4)
        idx = BesovIndex(0.5)
        assert tilde_besov_norm(self._const(f), math.inf, idx, frame64) == pytest.approx(besov_norm(f, idx, frame64))

    def test_constant_l1(self, grid64, frame64):
        f = random_annulus(grid64, 1, 20, seed=4)
        idx = BesovIndex(0.5)
        assert tilde_besov_norm(self._const(f, 2.0), 1, idx, frame64) == pytest.approx(2.0 * besov_norm(f, idx, frame64))

    def test_exponential_decay(self, grid64, frame64):
        f = single_mode(grid64, 1, 0)
        t = np.linspace(0, 1, 401)
        p = PhysicalParams(1.5)
        traj = TrajectoryRecord(t, [fractional_semigroup(f, s, p) for s in t])
        idx = BesovIndex(0.0)
        expect = besov_norm(f, idx, frame64) * (1 - math.exp(-1))
        assert tilde_besov_norm(traj, 1, idx, frame64) == pytest.approx(expect, rel=1e-5)

    def test_needs_two_snapshots(self, grid64, frame64):
        traj = TrajectoryRecord([0.0], [single_mode(grid64, 1, 0)])
        with pytest.raises(InsufficientDataError):
            tilde_besov_norm(traj, 1, BesovIndex(0), frame64)


class TestParaproduct:
    def test_zero_partner(self, grid64, frame64):
        f = random_annulus(grid64, 1, 20, seed=5)
        parts = paraproduct_split(f, SpectralField.zeros(grid64), frame64)
        assert all(p.l2() == 0 for p in parts)

    def test_low_high_separation(self, grid64, frame64):
        f = single_mode(grid64, 1, 0)
        g = single_mode(grid64, 16, 0)
        tfg, tgf, rem = paraproduct_split(f, g, frame64)
        total = dealiased_product(f, g)
        assert tgf.l2() <= 1e-10 * total.l2()
        assert rem.l2() <= 1e-10 * total.l2()
        assert rel_l2(tfg, total) <= 1e-12

    @given(seed=st.integers(0, 10**6))
    @settings(max_examples=10, deadline=None)
    def test_reconstruction(self, seed):
        g = Grid2D(64)
        fr = build_frame(g)
        f = random_annulus(g, 1, 30, seed=seed)
        h = random_annulus(g, 1, 30, seed=seed + 7)
        a, b, c = paraproduct_split(f, h, fr)
        assert rel_l2(a + b + c, dealiased_product(f, h)) <= 1e-10

    def test_grid_mismatch(self, grid64, grid32, frame64):
        with pytest.raises(StructuralError):
            paraproduct_split(single_mode(grid64, 1, 0), single_mode(grid32, 1, 0), frame64)
