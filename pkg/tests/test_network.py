from dataclasses import replace

import numpy as np
import pytest

import frozen
import oracles
from cryolink.config import load_experiment, shipped_config_path
from cryolink.errors import DomainError, TopologyError
from cryolink.gaussian import Loss, apply_chain, make_thermal_state, vacuum
from cryolink.heatprofile import HeatModel, ResponseFit
from cryolink.network import (
    SWEEP_COLUMNS,
    ExperimentConfig,
    LinkSpec,
    LossSegment,
    NodeSpec,
    SqueezeSpec,
    SweepSpec,
    Topology,
    build_transfer_chain,
    cable_loss,
    compose_multihop,
    config_at_center_temperature,
    db_to_loss,
    run_transfer,
    sweep_center_temperature,
)
from cryolink.thermal import planck_occupation, quantum_temperature, threshold_kappa

F = frozen.SIGNAL_HZ


def temperature_for_photons(n):
    if n == 0:
        return 1e-4  # n ~ exp(-2700): exactly zero in double precision
    return float(quantum_temperature(F)) / np.log1p(1 / n)


def lossless_config(r=0.8, n_th=0.0, taps=("hr_input", "hr_output", "receiver"), n_added=0.0):
    t_att = temperature_for_photons(n_th)
    return ExperimentConfig(
        nodes=(NodeSpec("alice", 0.035, t_att), NodeSpec("bob", 0.021)),
        links=(LinkSpec("alice", "bob", attenuation=0.0),),
        squeeze=SqueezeSpec(r, 0.0, n_added),
        taps=taps,
    )


def lossy_config(**kwargs):
    base = dict(
        nodes=(
            NodeSpec("alice", 0.035, 0.043, (LossSegment("L2", 0, 0.05), LossSegment("L3", 1, 0.02))),
            NodeSpec("bob", 0.021, None, (LossSegment("L4", 1, 0.03),)),
        ),
        links=(LinkSpec("alice", "bob"),),
        squeeze=SqueezeSpec(0.77),
    )
    base.update(kwargs)
    return ExperimentConfig(**base)


class TestLossHelpers:
    def test_cable_loss(self):
        assert cable_loss(6.0, 1.01) == pytest.approx(frozen.CABLE_LOSS_6M, rel=1e-12)
        assert cable_loss(6.0, 1.01) == pytest.approx(1.394e-3, abs=5e-7)

    @pytest.mark.parametrize("db, eps", [(0.0, 0.0), (3.0103, 0.5), (10.0, 0.9)])
    def test_db_to_loss(self, db, eps):
        assert db_to_loss(db) == pytest.approx(eps, abs=1e-5)

    def test_rejects_negative_db(self):
        with pytest.raises(DomainError):
            db_to_loss(-1.0)


class TestChain:
    def test_lossless_is_squeeze_then_splitter(self):
        assert [el.label for el in build_transfer_chain(lossless_config())] == ["S", "B"]

    def test_full_order(self):
        labels = [el.label for el in build_transfer_chain(lossy_config())]
        assert labels == ["S", "L2", "B", "L3", "C", "L4"]

    def test_tap_truncation(self):
        labels = [el.label for el in build_transfer_chain(lossy_config(taps=("hr_input",)))]
        assert labels == ["S", "L2"]

    def test_cable_bath_uses_center_temperature(self):
        chain = build_transfer_chain(lossy_config(center_temperature=0.5))
        cable = [el for el in chain if el.label == "C"]
        assert len(cable) == 1
        assert cable[0].n_env == pytest.approx(planck_occupation(F, 0.5))
        assert cable[0].epsilon == pytest.approx(frozen.CABLE_LOSS_6M)

    def test_profile_bath_slices_compose(self):
        cfg = lossy_config(links=(LinkSpec("alice", "bob", bath="profile", slices=16),), heat=HeatModel(grid_points=101))
        cable = [el for el in build_transfer_chain(cfg) if el.label == "C"]
        assert len(cable) == 16
        assert 1 - np.prod([1 - el.epsilon for el in cable]) == pytest.approx(frozen.CABLE_LOSS_6M, rel=1e-12)

    def test_segment_bath_override(self):
        node = NodeSpec("alice", 0.035, 0.043, (LossSegment("L1", 0, 0.1, bath=0.5),))
        cfg = lossy_config(nodes=(node, NodeSpec("bob", 0.021)))
        l1 = build_transfer_chain(cfg)[0]
        assert l1.label == "L1" and l1.n_env == pytest.approx(planck_occupation(F, 0.5))

    @pytest.mark.parametrize(
        "nodes, links",
        [
            ((NodeSpec("alice", 0.035, 0.04),), (LinkSpec("alice", "bob"),)),
            ((NodeSpec("alice", 0.035, 0.04), NodeSpec("bob", 0.02)), (LinkSpec("alice", "carol"),)),
            ((NodeSpec("alice", 0.035), NodeSpec("bob", 0.02)), (LinkSpec("alice", "bob"),)),
            (
                (NodeSpec("alice", 0.035, 0.04), NodeSpec("bob", 0.02, None, (LossSegment("L2", 0, 0.1),))),
                (LinkSpec("alice", "bob"),),
            ),
        ],
    )
    def test_topology_errors(self, nodes, links):
        with pytest.raises(TopologyError):
            ExperimentConfig(nodes=nodes, links=links, squeeze=SqueezeSpec(0.5)).endpoints()

    @pytest.mark.parametrize("stage, mode", [("L1", 1), ("L4", 0), ("X", 0)])
    def test_segment_mode_checked(self, stage, mode):
        with pytest.raises(DomainError):
            LossSegment(stage, mode, 0.1)


class TestTransfer:
    def test_vacuum_passthrough(self):
        result = run_transfer(lossless_config(r=0.0))
        for report in result.reports.values():
            assert report.squeezing_db == pytest.approx((0.0, 0.0), abs=1e-12)
            assert report.purity == pytest.approx(1.0, abs=1e-12)
            assert report.negativity == 0.0

    @pytest.mark.parametrize("r", [0.1, 0.77, 1.5])
    @pytest.mark.parametrize("n_th", [0.0, 0.05, 0.5, 2.0])
    def test_hr_output_variance(self, r, n_th):
        state = run_transfer(lossless_config(r, n_th)).states["hr_output"]
        for mode in (0, 1):
            assert state.mode_block(mode)[0, 0] == pytest.approx(oracles.split_output_variance(r, n_th), abs=1e-12)

    @pytest.mark.parametrize("r", [0.0, 0.5, 2.0, 4.0])
    def test_three_db_bound(self, r):
        report = run_transfer(lossless_config(r)).reports["hr_output"]
        assert max(report.squeezing_db) <= 10 * np.log10(2) + 1e-12

    def test_taps_subset(self):
        result = run_transfer(lossy_config(taps=("hr_output",)))
        assert list(result.states) == ["hr_output"]

    def test_shipped_base_point(self):
        reports = run_transfer(load_experiment(shipped_config_path("base_temperature"))).reports
        assert reports["hr_input"].squeezing_db[0] == pytest.approx(6.70, abs=1e-6)
        assert reports["receiver"].squeezing_db[1] == pytest.approx(2.10, abs=1e-6)
        assert reports["receiver"].negativity == pytest.approx(0.501, abs=1e-6)


class TestSweep:
    def test_center_only_columns(self):
        cfg = lossy_config()
        result = sweep_center_temperature(cfg, [0.1, 0.5, 1.0], mode="center_only")
        assert result.to_csv().splitlines()[0] == ",".join(SWEEP_COLUMNS)
        np.testing.assert_array_equal(result.column("t_center_K"), [0.1, 0.5, 1.0])
        # only the cable bath changes: hr_input is untouched
        assert np.ptp(result.column("s_hr_in_dB")) == 0.0
        assert np.all(np.diff(result.column("s_receiver_dB")) < 0)

    def test_parallel_matches_serial(self):
        cfg = lossy_config()
        values = np.linspace(0.1, 1.0, 7)
        serial = sweep_center_temperature(cfg, values, mode="center_only")
        parallel = sweep_center_temperature(cfg, values, mode="center_only", workers=4)
        assert serial.to_csv() == parallel.to_csv()

    def test_full_heating_couples_temperatures(self):
        fits = {"attenuator": ResponseFit(0.1, 0.03, 0.2), "alice_mc": ResponseFit(0.0, 0.035, 0.1),
                "bob_mc": ResponseFit(0.0, 0.021, 0.05)}
        cfg = lossy_config(sweep=SweepSpec("full_heating", (0.1, 0.6), fits))
        shifted = config_at_center_temperature(cfg, 0.6, "full_heating")
        alice, bob = shifted.nodes
        assert alice.attenuator_temperature == pytest.approx(fits["attenuator"](0.6))
        assert alice.mc_temperature == pytest.approx(fits["alice_mc"](0.6))
        assert bob.mc_temperature == pytest.approx(fits["bob_mc"](0.6))

    def test_full_heating_monotone_beyond_kappa(self):
        result = sweep_center_temperature(load_experiment(shipped_config_path("fig4_solid")))
        t_att = result.column("t_att_K")
        s = result.column("s_receiver_dB")
        hot = t_att > threshold_kappa(F)
        assert hot.any()
        assert np.all(np.diff(s[np.argmax(hot):]) <= 0)
        assert np.all(result.column("negativity") > 0)

    def test_full_heating_requires_fits(self):
        with pytest.raises(DomainError):
            sweep_center_temperature(lossy_config(), [0.2], mode="full_heating")

    @pytest.mark.parametrize("values", [[], [0.5, 0.2], [0.05], [1.5]])
    def test_rejects_values(self, values):
        with pytest.raises(DomainError):
            sweep_center_temperature(lossy_config(), values, mode="center_only")


class TestMultihop:
    def test_single_link_matches_cable(self):
        topo = Topology.square_lattice(1, 2, bath=0.11)
        chain = compose_multihop(topo, ["0,0", "0,1"], mode=1)
        cable = [el for el in build_transfer_chain(lossy_config()) if el.label == "C"][0]
        assert chain == [cable]

    def test_two_links_compose(self):
        topo = Topology.square_lattice(1, 3, bath=0.0)
        chain = compose_multihop(topo, ["0,0", "0,1", "0,2"])
        eps1 = topo.links[0].epsilon
        out = apply_chain(make_thermal_state(1, [4.0]), chain)
        direct = apply_chain(make_thermal_state(1, [4.0]), [Loss(0, 1 - (1 - eps1) ** 2, 0.0)])
        np.testing.assert_allclose(out.covariance, direct.covariance, atol=1e-12)

    def test_insertion_loss_of_intermediate_nodes(self):
        topo = Topology.square_lattice(2, 2, insertion_loss=0.1)
        chain = compose_multihop(topo, ["0,0", "0,1", "1,1"])
        assert [el.label for el in chain] == ["C", "node:0,1", "C"]

    @pytest.mark.parametrize("path", [[], ["0,0"]])
    def test_trivial_path(self, path):
        assert compose_multihop(Topology.square_lattice(2, 2), path) == []

    def test_disconnected(self):
        with pytest.raises(TopologyError):
            compose_multihop(Topology.square_lattice(2, 2), ["0,0", "1,1"])

    def test_unknown_node(self):
        with pytest.raises(TopologyError):
            compose_multihop(Topology.square_lattice(2, 2), ["0,0", "5,5"])

    def test_lattice_size(self):
        topo = Topology.square_lattice(3, 4)
        assert len(topo.nodes) == 12
        assert len(topo.links) == 3 * 3 + 2 * 4

    def test_vacuum_bath_keeps_vacuum(self):
        topo = Topology.square_lattice(1, 4)
        out = apply_chain(vacuum(1), compose_multihop(topo, ["0,0", "0,1", "0,2", "0,3"]))
        np.testing.assert_allclose(out.covariance, vacuum(1).covariance, atol=1e-15)


def test_config_replace_keeps_validation():
    with pytest.raises(DomainError):
        replace(lossy_config(), taps=("nowhere",))
