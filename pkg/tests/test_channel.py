import numpy as np
import pytest

from emql.channel import Channel, DelayModel, sample_delay


def test_delay_model_validation():
    with pytest.raises(ValueError):
        DelayModel.constant(-1)
    with pytest.raises(ValueError):
        DelayModel.geometric(1.0)
    with pytest.raises(ValueError):
        DelayModel("uniform")


def test_delay_model_labels_and_means():
    assert str(DelayModel.constant(2)) == "const2"
    assert DelayModel.constant(3).mean == 3
    assert DelayModel.geometric(0.5).mean == pytest.approx(2.0)


def test_zero_delay_arrives_same_step():
    ch = Channel(DelayModel.constant(0), np.random.default_rng(0))
    ch.send(1, 5, 0.0, False, now=1)
    out = ch.poll(1)
    assert [o.timestamp for o in out] == [1] and out[0].state == 5


def test_constant_delay_arrival_step():
    ch = Channel(DelayModel.constant(2), np.random.default_rng(0))
    ch.send(1, 3, 1.0, False, now=1)
    assert ch.poll(2) == []
    out = ch.poll(3)
    assert len(out) == 1 and out[0].arrival == 3 and out[0].reward == 1.0


def test_poll_sorts_overtaking_arrivals():
    class Scripted:
        def __init__(self, delays):
            self.delays = iter(delays)

        def geometric(self, _):
            return next(self.delays)

    ch = Channel(DelayModel.geometric(0.5), Scripted([3, 1, 1]))
    ch.send(1, 10, 0.0, False, now=1)  # arrives at 4
    ch.send(2, 20, 0.0, False, now=2)  # arrives at 3
    assert [o.timestamp for o in ch.poll(3)] == [2]
    ch.send(3, 30, 0.0, False, now=3)  # arrives at 4
    assert [o.timestamp for o in ch.poll(4)] == [1, 3]


def test_send_rejects_bad_stamps():
    ch = Channel(DelayModel.constant(1), np.random.default_rng(0))
    with pytest.raises(ValueError):
        ch.send(2, 0, 0.0, False, now=1)
    ch.send(1, 0, 0.0, False, now=1)
    with pytest.raises(ValueError):
        ch.send(1, 0, 0.0, False, now=1)


def test_flush_empties_in_timestamp_order():
    ch = Channel(DelayModel.geometric(0.9), np.random.default_rng(1))
    for t in range(1, 30):
        ch.send(t, t, 0.0, False, now=t)
    out = ch.flush()
    assert [o.timestamp for o in out] == list(range(1, 30))
    assert len(ch) == 0 and ch.flush() == []


@pytest.mark.parametrize("p", [0.0, 0.5, 2 / 3, 0.9])
def test_every_observation_delivered_exactly_once(p):
    ch = Channel(DelayModel.geometric(p), np.random.default_rng(7))
    seen = []
    for t in range(1, 200):
        ch.send(t, t, 0.0, False, now=t)
        arrived = ch.poll(t)
        assert all(o.arrival <= t for o in arrived)
        seen += [o.timestamp for o in arrived]
    seen += [o.timestamp for o in ch.flush()]
    assert sorted(seen) == list(range(1, 200))


def test_same_seed_same_arrivals():
    def trace(seed):
        ch = Channel(DelayModel.geometric(0.6), np.random.default_rng(seed))
        for t in range(1, 50):
            ch.send(t, t, 0.0, False, now=t)
        return [(o.timestamp, o.arrival) for o in ch.flush()]

    assert trace(3) == trace(3)
    assert trace(3) != trace(4)


@pytest.mark.parametrize("p", [0.0, 0.5, 2 / 3])
def test_geometric_sample_mean(p):
    rng = np.random.default_rng(0)
    model = DelayModel.geometric(p)
    draws = np.array([sample_delay(model, rng) for _ in range(100_000)])
    assert draws.min() >= 1
    assert abs(draws.mean() - 1 / (1 - p)) / (1 / (1 - p)) < 0.05
