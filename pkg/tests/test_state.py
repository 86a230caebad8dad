import numpy as np
import pytest

from delaysched.errors import EmptyServiceSet, InsufficientHistory
from delaysched.state import (
    ArrivalProcess,
    NetworkState,
    NsiHistory,
    PacketQueue,
    delayed_view,
)
from delaysched.topology import DelayTable

TABLE1 = DelayTable(((0, 1, 3), (2, 0, 4), (1, 2, 0)))


class TestArrivalProcess:
    def test_kinds(self):
        with pytest.raises(ValueError):
            ArrivalProcess("uniform", (0.5,))
        with pytest.raises(ValueError):
            ArrivalProcess("bernoulli", (1.5,))

    def test_bernoulli_support(self):
        p = ArrivalProcess("bernoulli", (0.3, 0.7))
        draws = p.sample(np.random.default_rng(0), 500)
        assert draws.min() >= 0 and draws.max() <= 1

    def test_truncation_cap(self):
        p = ArrivalProcess("truncated_poisson", (5.0,), a_max=3)
        draws = p.sample(np.random.default_rng(0), 500)
        assert draws.max() <= 3
        assert abs(sum(p.pmf(0, k) for k in range(4)) - 1.0) < 1e-12

    def test_poisson_pmf(self):
        p = ArrivalProcess("poisson", (0.25,))
        assert p.pmf(0, 0) == pytest.approx(np.exp(-0.25))
        assert p.mean(0) == 0.25


class TestPacketQueue:
    def test_fifo_and_partial_service(self):
        q = PacketQueue()
        q.push(2, t=0)
        q.push(1, t=1)
        assert len(q) == 3
        served = q.serve(5, t=2, record=True)
        assert served == 3
        assert q.served == 3
        assert q.delay_sum == 2 + 2 + 1

    def test_same_slot_service_zero_delay(self):
        q = PacketQueue()
        q.push(1, t=4)
        q.serve(1, t=4, record=True)
        assert q.delay_sum == 0

    def test_warmup_service_not_recorded(self):
        q = PacketQueue()
        q.push(2, t=-3)
        q.serve(1, t=-1, record=False)
        assert q.served == 0 and q.delay_sum == 0
        q.serve(1, t=0, record=True)
        assert q.served == 1 and q.delay_sum == 3


class TestNsiHistory:
    def test_reads_and_depth(self):
        h = NsiHistory(2, depth=3, start_slot=0)
        h.append([1, 2], [0, 1])
        h.append([3, 4], [1, 0])
        assert h.queue_at(0, 0) == 3
        assert h.queue_at(1, 1) == 2
        assert h.channel_at(0, 1) == 0
        with pytest.raises(InsufficientHistory):
            h.queue_at(0, 2)

    def test_append_advances_time(self):
        h = NsiHistory(1, depth=2, start_slot=-5)
        assert h.t == -6
        h.append([0], [0])
        assert h.t == -5

    def test_delayed_view_table1(self):
        h = NsiHistory(3, depth=5, start_slot=-4)
        for s in range(-4, 1):
            h.append([10 + s, 20 + s, 30 + s], [0, 1, 0])
        view = delayed_view(h, TABLE1, observer=0)
        # own link at delay 0, down from tau_l_max = 3
        assert [d for d, _, _ in view[0]] == [3, 2, 1, 0]
        # link 2's queue seen at delays 4..2
        assert [d for d, _, _ in view[1]] == [4, 3, 2]
        assert [q for _, q, _ in view[1]] == [16, 17, 18]
        # link 3 at delays 2..1
        assert [d for d, _, _ in view[2]] == [2, 1]

    def test_single_link_view(self):
        t = DelayTable(((0,),))
        h = NsiHistory(1, depth=1, start_slot=0)
        h.append([7], [1])
        view = delayed_view(h, t, observer=0)
        assert view[0] == ((0, 7, 1),)


class TestNetworkState:
    def test_update_law(self):
        net = NetworkState(1, depth=2, start_slot=0)
        net.queues[0].push(5, t=-1)
        served = net.advance_slot([2], [3], t=0, record=True)
        assert served == [3]
        assert net.queue_lengths() == [4]

    def test_positive_part(self):
        net = NetworkState(1, depth=2, start_slot=0)
        net.queues[0].push(1, t=-1)
        served = net.advance_slot([0], [3], t=0, record=True)
        assert served == [1]
        assert net.queue_lengths() == [0]

    def test_conservation(self):
        rng = np.random.default_rng(3)
        net = NetworkState(3, depth=2, start_slot=0)
        for t in range(100):
            q_before = sum(net.queue_lengths())
            arr = rng.integers(0, 3, size=3)
            srv = rng.integers(0, 3, size=3)
            served = net.advance_slot(arr, srv, t, record=True)
            q_after = sum(net.queue_lengths())
            assert q_after - q_before == int(arr.sum()) - sum(served)

    def test_no_negative_delays(self):
        rng = np.random.default_rng(4)
        net = NetworkState(2, depth=2, start_slot=0)
        for t in range(200):
            net.advance_slot(rng.integers(0, 2, 2), rng.integers(0, 3, 2), t, True)
        assert all(q.delay_sum >= 0 for q in net.queues)

    def test_drain_to_zero(self):
        net = NetworkState(2, depth=2, start_slot=0)
        net.queues[0].push(5, t=-1)
        net.queues[1].push(2, t=-1)
        for t in range(10):
            net.advance_slot([0, 0], [1, 1], t, record=True)
        assert net.queue_lengths() == [0, 0]

    def test_empty_service_set(self):
        net = NetworkState(1, depth=1, start_slot=0)
        with pytest.raises(EmptyServiceSet):
            net.mean_delay()
