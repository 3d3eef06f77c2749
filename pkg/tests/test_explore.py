from __future__ import annotations

from recoswap.explore import explore
from recoswap.swap_indep import RecoverIndFrame


def test_crash_free_exploration():
    res = explore(n=2, ops=1, crashes=0)
    assert res.ok and res.terminals > 0
    assert res.histories > 1 and res.stuck == 0


def test_one_crash_exploration():
    res = explore(n=2, ops=1, crashes=1)
    assert res.ok, res.failures[:1]
    assert res.states > 10_000


def test_truncation_is_reported():
    res = explore(n=2, ops=1, crashes=1, max_states=500)
    assert res.truncated and not res.ok


def test_a_broken_recovery_is_caught(monkeypatch):
    real = RecoverIndFrame._compute

    def always_head(self, p):
        out = real(self, p)
        if self.pc == "SPLICE":
            p.env["r.target"] = 0  # ignore the computed order
        return out

    monkeypatch.setattr(RecoverIndFrame, "_compute", always_head)
    res = explore(n=2, ops=1, crashes=1)
    assert res.failures and not res.ok
