"""Smoke test for the compiled module: python python/smoke_test.py"""

import json
import math

import h2rbox


def main():
    a = (0.0, 0.0, 4.0, 2.0, 0.3)
    assert abs(h2rbox.rbox_iou(a, a) - 1.0) < 1e-9
    # same box written with swapped sides
    assert abs(h2rbox.rbox_iou(a, (0.0, 0.0, 2.0, 4.0, 0.3 + math.pi / 2)) - 1.0) < 1e-9

    cx, cy, w, h = h2rbox.circumscribed_hbox(a)
    sw, sh = h2rbox.circumscribed_hbox(h2rbox.symmetric_rbox(a))[2:]
    assert abs(w - sw) < 1e-9 and abs(h - sh) < 1e-9
    assert h2rbox.l_wh_theta(a, a) < 1e-12

    cls, sols = h2rbox.enumerate_feasible(4.0, 2.0, math.radians(30), math.radians(45))
    assert cls == "UNIQUE", cls
    assert abs(sols[0][2] - math.radians(30)) < math.radians(0.5)
    cls, sols = h2rbox.enumerate_feasible(4.0, 2.0, math.radians(30), math.radians(45), "hcrc+sc")
    assert cls == "TWO_FOLD" and len(sols) == 2

    try:
        h2rbox.enumerate_feasible(4.0, 2.0, 0.5, 0.7, "bogus")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown constraint set accepted")

    r = json.loads(h2rbox.recover(seed=1, scene=json.dumps({"count": 20}), config=json.dumps({"steps": 400})))
    assert r["diverged_at"] is None
    assert r["summary"]["objects"] == 20

    checks = json.loads(h2rbox.self_check(seed=0, quick=True))
    assert len(checks) == 6 and all(c["passed"] for c in checks), checks
    print("smoke test ok")


if __name__ == "__main__":
    main()
