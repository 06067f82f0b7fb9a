import numpy as np
import pytest
from hypothesis import given, strategies as st

from enamle import metering as mt
from enamle.engine import InferenceOutcome


def outcome(find=0, detect=0, impute=0, infer=0, vote=0, label=0, seconds=None):
    costs = {"find": find, "detect": detect, "impute": impute, "infer": infer, "vote": vote}
    return InferenceOutcome(label, "secoe", (), impute, costs, seconds)


class TestFormulas:
    @pytest.mark.parametrize("c,n,expected", [(9, 10, 0.9), (0, 10, 0.0), (10, 10, 1.0)])
    def test_accuracy(self, c, n, expected):
        assert mt.accuracy(c, n) == expected

    def test_accuracy_errors(self):
        with pytest.raises(mt.MeteringError):
            mt.accuracy(0, 0)
        with pytest.raises(mt.MeteringError):
            mt.accuracy(11, 10)

    @pytest.mark.parametrize("n,ms,expected", [(100, 50, 2.0), (1, 1, 1.0), (0, 5, 0.0)])
    def test_throughput(self, n, ms, expected):
        assert mt.throughput(n, ms) == expected

    def test_throughput_zero_time(self):
        with pytest.raises(mt.MeteringError):
            mt.throughput(3, 0)

    def test_joules(self):
        assert abs(1000 * mt.joules(0.1, 0.5, 5.039) - 251.95) <= 1e-9
        assert mt.joules(0.0, 0.5, 5.039) == 0.0
        assert mt.joules(1, 1, 1) == 1.0


class TestAccount:
    def test_infer_is_coefficient_times_pairs(self):
        c = 7.0
        model = mt.EnergyModel(cost_coefficients={**mt.DEFAULT_COEFFICIENTS, "infer": c})
        assert mt.account(outcome(infer=3 * 5), model)["infer"] == 15 * c

    def test_base_path_skips_stages(self):
        e = mt.account(outcome(impute=2, infer=6), mt.EnergyModel())
        assert e["find"] == e["detect"] == e["vote"] == 0.0

    def test_missing_coefficient(self):
        with pytest.raises(mt.MeteringError, match="vote"):
            mt.EnergyModel(cost_coefficients={"find": 1, "detect": 1, "impute": 1, "infer": 1})

    def test_negative_coefficient(self):
        with pytest.raises(mt.MeteringError):
            mt.EnergyModel(cost_coefficients={**mt.DEFAULT_COEFFICIENTS, "find": -1})

    @given(st.lists(st.integers(0, 500), min_size=5, max_size=5))
    def test_conservation(self, counts):
        o = outcome(*counts)
        e = mt.account(o, mt.EnergyModel())
        rep = mt.summarize([o], [0], mt.EnergyModel())
        assert abs(sum(e.values()) - mt.total_energy(e)) <= 1e-9
        assert abs(sum(rep.per_op_energy.values()) - rep.total_energy) <= 1e-9

    @given(st.integers(1, 30), st.integers(1, 20), st.integers(0, 20))
    def test_extra_participant_costs_more(self, n, width, match):
        model = mt.EnergyModel()
        # one more voter adds its features, its imputations and its vote
        a = outcome(find=10, detect=8, impute=n * match, infer=n * width, vote=n)
        b = outcome(find=10, detect=8, impute=(n + 1) * match, infer=(n + 1) * width, vote=n + 1)
        assert mt.total_energy(mt.account(b, model)) > mt.total_energy(mt.account(a, model))

    def test_measured_mode(self):
        amps = {"find": 0.1, "detect": 0.1, "impute": 0.5, "infer": 0.5, "vote": 0.2}
        model = mt.EnergyModel(mode="measured", current_profile=amps)
        secs = {"find": 0.0, "detect": 0.0, "impute": 0.1, "infer": 0.0, "vote": 0.0}
        e = mt.account(outcome(seconds=secs), model)
        assert abs(e["impute"] - 251.95) <= 1e-9
        assert model.unit == "mJ"
        with pytest.raises(mt.MeteringError):
            mt.account(outcome(), model)

    def test_measured_throughput_uses_wall_clock(self):
        amps = dict.fromkeys(mt.STAGES, 1.0)
        model = mt.EnergyModel(mode="measured", current_profile=amps)
        secs = dict.fromkeys(mt.STAGES, 0.0)
        rep = mt.summarize([outcome(seconds=secs)] * 4, [0] * 4, model, wall_ms=2.0)
        assert rep.throughput == 2.0


class TestSummarize:
    def test_means_and_accuracy(self):
        outs = [outcome(vote=3, label=1), outcome(vote=5, label=0)]
        rep = mt.summarize(outs, [1, 1], mt.EnergyModel())
        assert rep.accuracy == 0.5
        assert rep.per_op_energy["vote"] == 5.0 * 4
        assert rep.throughput == 2 / (2 * 20.0)

    def test_bit_deterministic(self):
        outs = [outcome(*np.random.default_rng(i).integers(0, 50, 5)) for i in range(30)]
        a = mt.summarize(outs, [0] * 30, mt.EnergyModel())
        b = mt.summarize(list(outs), [0] * 30, mt.EnergyModel())
        assert a == b

    def test_length_mismatch(self):
        with pytest.raises(mt.MeteringError):
            mt.summarize([outcome()], [0, 1], mt.EnergyModel())


def test_energy_model_dict_round_trip():
    m = mt.EnergyModel.from_dict({"coefficients": {"vote": 9}})
    assert m.cost_coefficients["vote"] == 9 and m.cost_coefficients["impute"] == 50.0
    assert mt.EnergyModel.from_dict(m.to_dict()) == m


def test_vote_share_peaks_at_lowest_rate(tmp_path):
    from enamle import bench

    doc = {
        "dataset": {"synth": {"groups": [4] * 6, "n_rows": 1200, "n_classes": 4, "noise": 0.1, "seed": 0}},
        "classifier": {"kind": "linear_svm", "hyperparameters": {"epochs": 10}, "seed": 0},
        "arms": [{"type": "secoe", "m": "MinM+4"}, {"type": "secoe", "m": "MinM+8"}],
        "schedule": {"rates": [5, 10, 20, 30, 40, 50, 60], "runs": 3, "seed": 0},
    }
    rows = bench.read_report(bench.run(bench.ExperimentConfig.from_dict(doc), tmp_path) / "results.csv")
    for arm in ("secoe-7", "secoe-11"):
        share = {
            r["rate"]: r["energy_vote"] / r["energy"]
            for r in rows if r["arm"] == arm and r["rate"] != "avg"
        }
        assert max(share, key=share.get) == "0.05"
