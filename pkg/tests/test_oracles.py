"""The dma_oracle itself is validated against hand-computed timelines before
anything else trusts it."""

from oracles import dma_oracle


def test_single_dma_wait_shortly_after_issue():
    # issue at c, wait at c+2, T_b=100, 256 B at 32 B/cycle
    c = 10
    (o,) = dma_oracle([{"issue_cycle": c, "link": "hbm>vmem", "size": 256,
                        "wait_cycle": c + 2}], t_base=100, bandwidth=32)
    assert o.base_done == c + 100
    assert o.transfer_start == c + 100
    assert o.complete == c + 108
    assert o.stall_base == 98          # base_done - wait
    assert o.stall_transfer == 8
    assert o.slack == 0
    assert o.scenario == "base_then_transfer"


def test_wait_during_transfer():
    (o,) = dma_oracle([{"issue_cycle": 0, "link": "hbm>vmem", "size": 256,
                        "wait_cycle": 103}], t_base=100, bandwidth=32)
    assert o.complete == 108
    assert o.stall_base == 0 and o.stall_transfer == 5
    assert o.scenario == "transfer_only"


def test_wait_after_complete_has_slack():
    (o,) = dma_oracle([{"issue_cycle": 0, "link": "hbm>vmem", "size": 256,
                        "wait_cycle": 158}], t_base=100, bandwidth=32)
    assert o.slack == 50 and o.stall_base == 0 and o.stall_transfer == 0
    assert o.scenario == "slack"


def test_back_to_back_serialize_on_one_link():
    a, b = dma_oracle([
        {"issue_cycle": 0, "link": "hbm>vmem", "size": 256},
        {"issue_cycle": 1, "link": "hbm>vmem", "size": 256},
    ], t_base=100, bandwidth=32)
    assert a.complete == 108
    assert b.base_done == 101
    assert b.transfer_start == a.complete      # link serialization
    assert b.complete == 116


def test_base_latencies_overlap_across_parallel_issues():
    dmas = dma_oracle([{"issue_cycle": i, "link": "hbm>vmem", "size": 64}
                       for i in range(3)], t_base=100, bandwidth=32)
    base_dones = [d.base_done for d in dmas]
    assert base_dones == [100, 101, 102]       # all within 3 cycles
    assert [d.transfer_start for d in dmas] == [100, 102, 104]
    assert [d.complete for d in dmas] == [102, 104, 106]


def test_different_links_do_not_serialize():
    a, b = dma_oracle([
        {"issue_cycle": 0, "link": "hbm>vmem", "size": 320},
        {"issue_cycle": 1, "link": "vmem>hbm", "size": 320},
    ], t_base=100, bandwidth=32)
    assert a.transfer_start == 100 and b.transfer_start == 101
    assert b.transfer_start == b.base_done     # no queue wait across links
    assert a.complete == 110 and b.complete == 111


def test_small_transfer_two_cycles():
    (o,) = dma_oracle([{"issue_cycle": 0, "link": "vmem>vmem", "size": 64}],
                      t_base=100, bandwidth=32)
    assert o.complete - o.transfer_start == 2  # T_t = ceil(64/32)
