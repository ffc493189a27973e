import numpy as np
import pytest

from risfeel.errors import DimensionError, UsageError
from risfeel.fedlearn import (
    Dataset,
    PartitionSpec,
    TrainSpec,
    evaluate,
    global_update,
    local_update,
    make_model,
    make_synthetic_task,
    partition,
)
from risfeel.rng import substream


def small_task(seed=0, n_train=400, n_test=400, C=3, F=6):
    return make_synthetic_task(C, F, n_train, n_test, substream(seed, "data"),
                               separation=2.5)


class TestPartition:
    def test_iid_single_device(self):
        train, _ = small_task()
        parts = partition(train, 1, PartitionSpec("iid", 50),
                          substream(0, "p"))
        assert len(parts) == 1 and len(parts[0]) == 50

    def test_disjoint_and_sized(self):
        train, _ = small_task()
        parts = partition(train, 4, PartitionSpec("iid", 80),
                          substream(1, "p"))
        assert all(len(p) == 80 for p in parts)

    def test_shard_one_class_per_device(self):
        # balanced synthetic set, shard(1), C == K: each device nearly pure
        rng = substream(2, "p")
        C = 4
        labels = np.repeat(np.arange(C), 100)
        feats = rng.standard_normal((len(labels), 3))
        data = Dataset(feats, labels)
        parts = partition(data, C, PartitionSpec("shard", 100, 1),
                          substream(2, "q"))
        for p in parts:
            counts = np.bincount(p.labels, minlength=C)
            assert counts.max() / len(p) >= 0.9

    def test_dirichlet_sizes(self):
        train, _ = small_task()
        parts = partition(train, 4, PartitionSpec("dirichlet", 60, alpha=0.3),
                          substream(3, "p"))
        assert all(len(p) == 60 for p in parts)

    def test_determinism(self):
        train, _ = small_task()
        a = partition(train, 3, PartitionSpec("iid", 50), substream(4, "p"))
        b = partition(train, 3, PartitionSpec("iid", 50), substream(4, "p"))
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.features, y.features)

    def test_insufficient_data(self):
        train, _ = small_task(n_train=100)
        with pytest.raises(UsageError):
            partition(train, 3, PartitionSpec("iid", 50), substream(5, "p"))


class TestLossAndGradient:
    def test_zero_model_uniform_softmax(self):
        train, _ = small_task(C=5, F=4)
        model = make_model("softmax", 4, 5)
        loss, _ = model.loss_and_gradient(np.zeros(model.dim), train)
        assert loss == pytest.approx(np.log(5), rel=1e-12)

    @pytest.mark.parametrize("kind", ["softmax", "mlp"])
    def test_gradient_matches_finite_differences(self, kind):
        rng = substream(6, "fd")
        C, F = 3, 4
        model = make_model(kind, F, C, hidden=5)
        data = Dataset(rng.standard_normal((12, F)), rng.integers(0, C, 12))
        params = 0.5 * rng.standard_normal(model.dim)
        _, grad = model.loss_and_gradient(params, data)
        h = 1e-5
        for j in rng.choice(model.dim, size=min(20, model.dim),
                            replace=False):
            e = np.zeros(model.dim)
            e[j] = h
            lp, _ = model.loss_and_gradient(params + e, data)
            lm, _ = model.loss_and_gradient(params - e, data)
            fd = (lp - lm) / (2 * h)
            denom = max(abs(fd), abs(grad[j]), 1e-8)
            assert abs(fd - grad[j]) / denom < 1e-5

    def test_duplicated_batch_invariance(self):
        rng = substream(7, "dup")
        model = make_model("softmax", 4, 3)
        data = Dataset(rng.standard_normal((10, 4)), rng.integers(0, 3, 10))
        doubled = Dataset(np.concatenate([data.features, data.features]),
                          np.concatenate([data.labels, data.labels]))
        params = rng.standard_normal(model.dim)
        l1, g1 = model.loss_and_gradient(params, data)
        l2, g2 = model.loss_and_gradient(params, doubled)
        assert l1 == pytest.approx(l2, rel=1e-12)
        np.testing.assert_allclose(g1, g2, atol=1e-12)

    def test_dimension_mismatch(self):
        model = make_model("softmax", 4, 3)
        with pytest.raises(DimensionError):
            model.loss_and_gradient(np.zeros(model.dim + 1),
                                    small_task(F=4, C=3)[0])


class TestLocalUpdate:
    def test_zero_learning_rate(self):
        train, _ = small_task()
        model = make_model("softmax", 6, 3)
        spec = TrainSpec(2, 16, 0.0, 1)
        delta = local_update(np.zeros(model.dim), train, spec, model,
                             substream(8, "t"))
        np.testing.assert_array_equal(delta, np.zeros(model.dim))

    def test_single_full_batch_step_identity(self):
        train, _ = small_task(n_train=64)
        model = make_model("softmax", 6, 3)
        lr = 0.3
        spec = TrainSpec(1, 64, lr, 1)
        params = substream(9, "i").standard_normal(model.dim)
        delta = local_update(params, train, spec, model, substream(9, "t"))
        _, grad = model.loss_and_gradient(params, train)
        np.testing.assert_allclose(delta, -lr * grad, atol=1e-12)

    def test_identical_data_and_stream_identical_delta(self):
        train, _ = small_task()
        model = make_model("softmax", 6, 3)
        spec = TrainSpec(2, 10, 0.1, 1)
        a = local_update(np.zeros(model.dim), train, spec, model,
                         substream(10, "t"))
        b = local_update(np.zeros(model.dim), train, spec, model,
                         substream(10, "t"))
        np.testing.assert_array_equal(a, b)

    def test_empty_data_rejected(self):
        model = make_model("softmax", 6, 3)
        with pytest.raises((UsageError, DimensionError)):
            local_update(np.zeros(model.dim),
                         Dataset(np.zeros((0, 6)), np.zeros(0, int)),
                         TrainSpec(1, 4, 0.1, 1), model, substream(0, "t"))


class TestGlobalUpdateAndEvaluate:
    def test_zero_aggregate_unchanged(self):
        p = substream(11, "g").standard_normal(10)
        np.testing.assert_array_equal(global_update(p, np.zeros(10)), p)

    def test_single_device_noiseless_composition(self):
        train, _ = small_task()
        model = make_model("softmax", 6, 3)
        spec = TrainSpec(1, 32, 0.2, 1)
        start = np.zeros(model.dim)
        delta = local_update(start, train, spec, model, substream(12, "t"))
        assert np.allclose(global_update(start, delta), start + delta)

    def test_separable_task_reaches_perfect_accuracy(self):
        # oracle fit by full-batch descent until the loss is tiny
        rng = substream(13, "sep")
        n = 100
        x = np.concatenate([rng.standard_normal((n, 2)) + [6, 0],
                            rng.standard_normal((n, 2)) - [6, 0]])
        y = np.concatenate([np.zeros(n, int), np.ones(n, int)])
        data = Dataset(x, y)
        model = make_model("softmax", 2, 2)
        params = np.zeros(model.dim)
        for _ in range(3000):
            loss, grad = model.loss_and_gradient(params, data)
            if loss < 0.01:
                break
            params -= 0.5 * grad
        assert loss < 0.01
        assert evaluate(params, data, model) == 1.0

    def test_zero_model_balanced_binary(self):
        rng = substream(14, "bal")
        x = rng.standard_normal((100, 3))
        y = np.concatenate([np.zeros(50, int), np.ones(50, int)])
        model = make_model("softmax", 3, 2)
        # constant predictor with lowest-index tie-break picks class 0
        assert evaluate(np.zeros(model.dim), Dataset(x, y), model) == 0.5

    def test_accuracy_in_unit_interval(self):
        train, test = small_task()
        model = make_model("softmax", 6, 3)
        acc = evaluate(substream(15, "m").standard_normal(model.dim), test,
                       model)
        assert 0.0 <= acc <= 1.0


class TestFullPipelineOracle:
    def test_noiseless_aircomp_matches_in_memory_averaging(self):
        # 50 rounds through the physical channel at zero noise vs a pure
        # in-memory federated-averaging loop
        from risfeel.aircomp import (DeviceProfile, identity_beamformer,
                                     plan_transmissions,
                                     transmit_and_aggregate)

        rng = substream(16, "pipe")
        K = 4
        train, test = small_task(n_train=800)
        parts = partition(train, K, PartitionSpec("iid", 100),
                          substream(16, "p"))
        model = make_model("softmax", 6, 3)
        spec = TrainSpec(1, 20, 0.1, 50)
        profiles = [DeviceProfile(len(p), float(len(p)), 1.0) for p in parts]
        h = (rng.standard_normal((K, 1)) + 1j * rng.standard_normal((K, 1)))
        f = identity_beamformer()
        plan = plan_transmissions(h, tuple(range(K)), profiles, f)

        params_air = np.zeros(model.dim)
        params_mem = np.zeros(model.dim)
        w = plan.weights
        for rnd in range(50):
            deltas = [
                local_update(params_air, parts[k], spec, model,
                             substream(16, "t", k, rnd))
                for k in range(K)
            ]
            rep = transmit_and_aggregate(plan, h, f, np.asarray(deltas), 0.0,
                                         0.0, substream(16, "n", rnd))
            params_air = global_update(params_air, rep.estimate)

            deltas_mem = [
                local_update(params_mem, parts[k], spec, model,
                             substream(16, "t", k, rnd))
                for k in range(K)
            ]
            params_mem = global_update(params_mem, w @ np.asarray(deltas_mem))

            rel = np.linalg.norm(params_air - params_mem) / max(
                np.linalg.norm(params_mem), 1e-12)
            assert rel < 1e-10


class TestLearningTrends:
    def test_more_devices_help_and_noniid_hurts_more(self):
        # error-free accuracy vs number of devices, iid vs shard partitions
        def final_acc(n_devices, mode, seed):
            train, test = make_synthetic_task(
                5, 10, 2000, 500, substream(seed, "task"), separation=1.2)
            spec = PartitionSpec(mode, 100, shards_per_device=1)
            parts = partition(train, n_devices, spec, substream(seed, "p"))
            model = make_model("softmax", 10, 5)
            tspec = TrainSpec(1, 20, 0.2, 15)
            params = np.zeros(model.dim)
            sizes = np.array([len(p) for p in parts], float)
            w = sizes / sizes.sum()
            for rnd in range(15):
                deltas = [
                    local_update(params, parts[k], tspec, model,
                                 substream(seed, "t", k, rnd))
                    for k in range(n_devices)
                ]
                params = global_update(params, w @ np.asarray(deltas))
            return evaluate(params, test, model)

        seeds = range(5)
        acc = {
            mode: {n: np.mean([final_acc(n, mode, s) for s in seeds])
                   for n in (2, 20)}
            for mode in ("iid", "shard")
        }
        assert acc["iid"][20] >= acc["iid"][2] - 0.01
        gap_iid = acc["iid"][20] - acc["iid"][2]
        gap_shard = acc["shard"][20] - acc["shard"][2]
        assert gap_shard >= gap_iid - 0.01
