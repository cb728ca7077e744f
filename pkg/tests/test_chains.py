"""Chain simulation: overlap conservation, the product law, the log budget."""

from __future__ import annotations

import math

import numpy as np
import pytest

import qtransfer as qt
from qtransfer.io import load_chain_config, save_chain_config
from oracles import kron_oracle

S2 = qt.SubsystemLayout.of(("S", 2))
KET0 = qt.basis_state(S2, 0)
KET1 = qt.basis_state(S2, 1)

CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def _link(label: str, matrix: np.ndarray, dim: int = 2) -> qt.ChainLink:
    layout = qt.SubsystemLayout.of(("S", 2), (label, dim))
    return qt.ChainLink(label=label, dim=dim, unitary=qt.UnitaryOperator(layout, matrix))


def identity_config(n_links: int, v=None, w=None) -> qt.ChainConfig:
    v = v or qt.PureState(S2, np.array([0.8, 0.6]))
    w = w or KET1
    links = tuple(_link(f"L{k + 1}", np.eye(4)) for k in range(n_links))
    return qt.ChainConfig(system_label="S", system_dim=2, v=v, w=w, links=links)


def copy_config(n_links: int) -> qt.ChainConfig:
    links = tuple(_link(f"L{k + 1}", CNOT) for k in range(n_links))
    return qt.ChainConfig(system_label="S", system_dim=2, v=KET0, w=KET1, links=links)


class TestRunChain:
    def test_identity_links_keep_all_overlaps(self):
        trace = qt.run_chain(identity_config(3))
        assert trace.factorizing
        initial = trace.initial_overlap
        for stage in trace.stages:
            assert abs(stage.global_overlap - initial) < 1e-12
            assert abs(stage.sys_overlap - initial) < 1e-12
            for label, overlap in stage.record_overlaps.items():
                assert abs(overlap - 1) < 1e-12

    def test_orthogonal_copy_chain_yields_orthogonal_records(self):
        trace = qt.run_chain(copy_config(4))
        assert trace.factorizing
        final = trace.final
        assert abs(final.sys_overlap) < 1e-12
        for label in trace.link_labels:
            assert abs(final.record_overlaps[label]) < 1e-12

    def test_random_chain_matches_monolithic_simulation(self):
        # oracle: build each link's full-space operator explicitly by enumerating
        # composite indices, evolve flat vectors, compare to run_chain snapshots
        config = qt.random_factorizing_config(3, seed=123, overlap=0.6)
        trace = qt.run_chain(config)

        dims = [2] + [link.dim for link in config.links]
        total = int(np.prod(dims))

        def embed(u: np.ndarray, link_axis: int) -> np.ndarray:
            full = np.zeros((total, total), dtype=complex)
            for row in range(total):
                digits_row = np.unravel_index(row, dims)
                for col in range(total):
                    digits_col = np.unravel_index(col, dims)
                    passive = all(
                        digits_row[a] == digits_col[a]
                        for a in range(len(dims))
                        if a not in (0, link_axis)
                    )
                    if not passive:
                        continue
                    r = digits_row[0] * dims[link_axis] + digits_row[link_axis]
                    c = digits_col[0] * dims[link_axis] + digits_col[link_axis]
                    full[row, col] += u[r, c]
            return full

        psi_v = config.v.amplitudes
        psi_w = config.w.amplitudes
        for k in range(len(config.links)):
            ready = config.link_ready(k).amplitudes
            psi_v = kron_oracle(psi_v, ready)
            psi_w = kron_oracle(psi_w, ready)
        for t, link in enumerate(config.links, start=1):
            full = embed(link.unitary.matrix, t)
            psi_v = full @ psi_v
            psi_w = full @ psi_w
            assert abs(np.vdot(psi_v, psi_w) - trace.stages[t].global_overlap) < 1e-10

    def test_dimension_mismatch_rejected(self):
        bad = qt.SubsystemLayout.of(("S", 3), ("L1", 2))
        link = qt.ChainLink(label="L1", dim=2, unitary=qt.UnitaryOperator(bad, np.eye(6)))
        with pytest.raises(qt.LayoutMismatchError):
            qt.ChainConfig(system_label="S", system_dim=2, v=KET0, w=KET1, links=(link,))


class TestOverlapProduct:
    def test_identity_links_trivial_product(self):
        trace = qt.run_chain(identity_config(2))
        lhs, rhs = qt.overlap_product_check(trace)
        assert abs(lhs - rhs) < 1e-12
        assert abs(lhs - trace.initial_overlap) < 1e-15

    def test_preserved_system_forces_unit_record_overlaps(self):
        # overlap 0.5 with the final system overlap still 0.5: every record
        # overlap magnitude must be 1 (no information deposited anywhere)
        config = qt.random_factorizing_config(3, seed=5, overlap=0.5, splits=[0.0, 0.0, 0.0])
        trace = qt.run_chain(config)
        lhs, rhs = qt.overlap_product_check(trace)
        assert abs(lhs - rhs) < 1e-10
        assert abs(abs(trace.final.sys_overlap) - 0.5) < 1e-10
        for label in trace.link_labels:
            assert abs(abs(trace.final.record_overlaps[label]) - 1) < 1e-10

    def test_single_link_absorbing_all_overlap(self):
        # record takes the whole overlap 0.5; system overlap driven to 1
        config = qt.random_factorizing_config(1, seed=6, overlap=0.5, splits=[1.0])
        trace = qt.run_chain(config)
        lhs, rhs = qt.overlap_product_check(trace)
        assert abs(lhs - 0.5) < 1e-10
        assert abs(rhs - 0.5) < 1e-10
        assert abs(abs(trace.final.record_overlaps["L1"]) - 0.5) < 1e-10
        assert abs(abs(trace.final.sys_overlap) - 1.0) < 1e-10

    def test_non_factorizing_chain_rejected(self):
        entangler = qt.random_unitary(qt.SubsystemLayout.of(("S", 2), ("L1", 2)), 3)
        config = qt.ChainConfig(
            system_label="S",
            system_dim=2,
            v=qt.PureState(S2, np.array([0.8, 0.6])),
            w=KET1,
            links=(qt.ChainLink(label="L1", dim=2, unitary=entangler),),
        )
        trace = qt.run_chain(config)
        assert not trace.factorizing
        final = trace.final
        assert final.sys_overlap is None
        assert 0.0 <= final.record_fidelities["L1"] <= 1.0 + 1e-9
        with pytest.raises(qt.NonFactorizingError):
            qt.overlap_product_check(trace)
        with pytest.raises(qt.NonFactorizingError):
            qt.quality_ledger(trace)


class TestQualityLedger:
    def test_orthogonal_budget_is_sentinel(self):
        trace = qt.run_chain(copy_config(3))
        ledger = qt.quality_ledger(trace)
        assert ledger.budget == float("-inf")
        assert any(term == float("-inf") for _, term in ledger.terms)
        assert ledger.consistent

    def test_preserved_system_forces_zero_terms(self):
        config = qt.random_factorizing_config(1, seed=7, overlap=0.5, splits=[0.0])
        ledger = qt.quality_ledger(qt.run_chain(config))
        terms = dict(ledger.terms)
        assert terms["L1"] == pytest.approx(0.0, abs=1e-10)
        assert ledger.budget == pytest.approx(terms["S"], abs=1e-8)

    def test_four_links_sharing_budget_equally(self):
        # budget log2 0.25 = -2 shared as -0.5 per link, system term 0
        splits = [0.25, 1 / 3, 0.5, 1.0]
        config = qt.random_factorizing_config(4, seed=8, overlap=0.5, splits=splits)
        ledger = qt.quality_ledger(qt.run_chain(config))
        terms = dict(ledger.terms)
        assert ledger.budget == pytest.approx(-2.0, abs=1e-10)
        assert terms["S"] == pytest.approx(0.0, abs=1e-8)
        for label in ("L1", "L2", "L3", "L4"):
            assert terms[label] == pytest.approx(-0.5, abs=1e-8)
        assert ledger.consistent

    @pytest.mark.parametrize("seed", range(10))
    def test_budget_closure_random_chains(self, seed):
        rng = np.random.default_rng(seed)
        n_links = int(rng.integers(1, 9))
        link_dim = int(rng.choice([2, 3]))
        config = qt.random_factorizing_config(
            n_links, seed=seed + 1000, link_dim=link_dim,
            overlap=float(rng.uniform(0.2, 0.9)),
        )
        trace = qt.run_chain(config)
        assert trace.conservation_defect() < 1e-10
        lhs, rhs = qt.overlap_product_check(trace)
        assert abs(lhs - rhs) < 1e-10
        ledger = qt.quality_ledger(trace)
        finite = [t for _, t in ledger.terms if t != float("-inf")]
        if len(finite) == len(ledger.terms) and ledger.budget != float("-inf"):
            assert abs(sum(finite) - ledger.budget) < 1e-8
            assert ledger.consistent

    def test_running_record_product_stays_above_budget(self):
        # exact system preservation: the running product of record overlap
        # magnitudes is nonincreasing and never drops below |<v|w>|
        config = qt.random_factorizing_config(5, seed=11, overlap=0.4)
        trace = qt.run_chain(config)
        target = abs(trace.initial_overlap)
        running = 1.0
        previous = math.inf
        for label in trace.link_labels:
            running *= abs(trace.final.record_overlaps[label])
            assert running <= previous + 1e-12
            assert running >= target - 1e-10
            previous = running


class TestBranchingState:
    def test_ghz_like_four_party(self):
        records = []
        for k in range(3):
            frag = qt.SubsystemLayout.of((f"E{k + 1}", 2))
            records.append((qt.basis_state(frag, 0), qt.basis_state(frag, 1)))
        amp = 1 / math.sqrt(2)
        state = qt.build_branching_state(amp, amp, KET0, KET1, records)
        assert abs(np.linalg.norm(state.amplitudes) - 1) < 1e-12
        assert state.layout.labels == ("S", "E1", "E2", "E3")
        expected = np.zeros(16, dtype=complex)
        expected[0] = amp
        expected[15] = amp
        assert np.max(np.abs(state.amplitudes - expected)) < 1e-12

    def test_single_fragment_reproduces_two_party_branch_state(self):
        frag = qt.SubsystemLayout.of(("A", 2))
        alpha, beta = 0.6, 0.8
        state = qt.build_branching_state(
            alpha, beta, KET0, KET1,
            [(qt.basis_state(frag, 0), qt.basis_state(frag, 1))],
        )
        expected = alpha * np.kron([1, 0], [1, 0]) + beta * np.kron([0, 1], [0, 1])
        assert np.max(np.abs(state.amplitudes - expected)) < 1e-12

    def test_overlapping_records_norm_matches_monolithic_oracle(self):
        rng = np.random.default_rng(12)
        alpha, beta = 1 / math.sqrt(2), 1 / math.sqrt(2)
        v = qt.random_pure(S2, rng)
        w = qt.state_with_overlap(v, 0.3, rng)
        records = []
        amp_v = v.amplitudes
        amp_w = w.amplitudes
        for k in range(5):
            frag = qt.SubsystemLayout.of((f"E{k + 1}", 2))
            rv = qt.random_pure(frag, rng)
            rw = qt.state_with_overlap(rv, 0.8, rng)
            records.append((rv, rw))
            amp_v = kron_oracle(amp_v, rv.amplitudes)
            amp_w = kron_oracle(amp_w, rw.amplitudes)
        state = qt.build_branching_state(alpha, beta, v, w, records)
        monolithic = alpha * amp_v + beta * amp_w
        monolithic = monolithic / np.linalg.norm(monolithic)
        assert np.max(np.abs(state.amplitudes - monolithic)) < 1e-12

    def test_zero_norm_rejected(self):
        frag = qt.SubsystemLayout.of(("E1", 2))
        rec = qt.basis_state(frag, 0)
        with pytest.raises(qt.NonNormalizableError):
            qt.build_branching_state(1.0, -1.0, KET0, KET0, [(rec, rec)])

    def test_requires_at_least_one_fragment(self):
        with pytest.raises(qt.InvalidStateError):
            qt.build_branching_state(0.6, 0.8, KET0, KET1, [])


class TestChainSerialization:
    def test_config_roundtrip(self, tmp_path):
        config = qt.random_factorizing_config(2, seed=77, overlap=0.5)
        path = tmp_path / "config.json"
        save_chain_config(config, path)
        loaded = load_chain_config(path)
        assert loaded.system_dim == config.system_dim
        assert np.max(np.abs(loaded.v.amplitudes - config.v.amplitudes)) < 1e-15
        for a, b in zip(loaded.links, config.links):
            assert a.label == b.label
            assert np.max(np.abs(a.unitary.matrix - b.unitary.matrix)) < 1e-15
        trace_a = qt.run_chain(config)
        trace_b = qt.run_chain(loaded)
        assert abs(trace_a.final.global_overlap - trace_b.final.global_overlap) < 1e-12
