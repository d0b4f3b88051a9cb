"""Smoke test for the omegalab_py extension module.

Builds nothing itself: expects `cargo build -p omegalab-py --release`
(or a debug build) to have produced the cdylib already.
"""

import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        ROOT / "target" / "release" / "libomegalab_py.so",
        ROOT / "target" / "debug" / "libomegalab_py.so",
    ]
    lib = next((p for p in candidates if p.exists()), None)
    if lib is None:
        sys.exit("build the extension first: cargo build -p omegalab-py --release")
    stage = Path(tempfile.mkdtemp(prefix="omegalab_py_"))
    shutil.copy2(lib, stage / "omegalab_py.so")
    sys.path.insert(0, str(stage))
    import omegalab_py

    return omegalab_py


def main():
    lab = load_module()
    D = lab.Dyadic

    # Exact dyadic arithmetic and rendering.
    d = D("7/2^5")
    assert d.fraction() == "7/2^5"
    assert d.binary() == "0.00111"
    assert d.prefix(5) == 7
    assert (d.digit(1), d.digit(3)) == (0, 1)
    assert D(3, 2).fraction() == "3/2^2"
    assert D("1/2^2") + D("1/2^2") == D("1/2^1")
    assert D("1/2^2") < D("1/2^1")
    assert D("0").is_zero()
    assert D("0").least_increment(3) == D("1/2^3")

    # Constant-offset game: closed form, full play, and fast evaluation agree.
    assert lab.predict_atomic(2, 1, 2) == D("1/2^2")
    gamma, steps, digest = lab.play_hload(1, 3, c=2)
    assert gamma == D("1/2^2") and steps == 6 and len(digest) == 16
    assert lab.least_effort_final(1, 3, c=2) == D("1/2^2")
    assert lab.least_effort_final(0, 3, g=[1, 2, 3]) == lab.play_hload(0, 3, g=[1, 2, 3])[0]

    # General prediction and interval-weight bounds over a signature.
    sig = [(0, 1, 1), (5, 2, 2)]
    pred = lab.predict_general(sig, 1, 0, 1)
    assert pred["floor"] is not None and pred["truncation_constant"] == 5
    assert pred["constraint"] >= pred["floor"]
    assert len(lab.truncated_sums(sig, 1)) == 1
    assert lab.lower_bound_holds(sig, 1, 0)

    # The naive weight bound fails on this signature over (0, 2].
    case = lab.false_bound_case(sig, 0, 2)
    assert case is not None
    gamma, claimed = case
    assert gamma == D("65/2^6") and claimed == D("33/2^5") and gamma < claimed

    # One-block ladder construction replays bit-exactly.
    run = lab.run_ladder_construction(1)
    assert run["outcomes"] == ["MetByCappedGamma"]
    assert not run["budget_exhausted"]
    assert run["final_alpha"] == D("7/2^5")
    assert run["total_stages"] == 458752
    assert run["boundaries"] == [1, 2]

    # Characteristic-set coding roundtrip with oracle metering.
    a = ["1/2^1", "3/2^2"]
    bits = lab.encode_set(a, 3)
    assert len(bits) == 7 and set(bits) <= {"0", "1"}
    prefix, match_stage, set_bits_read = lab.decode_real(bits, a, 3)
    assert prefix == D("3/2^2").prefix(3) == 6
    assert set_bits_read <= 7
    for index in range(1, 8):
        bit, consulted = lab.set_bit_from_real(a, index)
        assert str(bit) == bits[index - 1]
        assert consulted <= index.bit_length()

    # Kraft allocation: two unit-length words exhaust the budget.
    words = lab.kraft_alloc([1, 1, 2])
    assert [len(w) if w else None for w in words] == [1, 1, None]

    # Oracle-length table machinery: threshold, reduction, Solovay test.
    assert lab.weight_threshold([1, 1, 2, 3]) == 1
    dec = lab.decide_members([(1, 0), (3, 0)], [2, 2, 3], ["1/2^1"])
    assert dec["threshold"] == 0
    assert dec["bits"] == [(1, 1), (2, 0), (3, 1)]
    assert dec["request_weight"] < D("1")
    sol = lab.solovay_summary(["1/2^2", "1/2^1"], ["1/2^2", "3/2^2"], [2, 2, 3])
    assert sol["items"] == 1 and sol["within"]
    assert lab.reduce_self_prefix(["1/2^1"], [2, 2, 3], 2) == 2

    # Condensation sandwich holds for a log-step table of 8 terms.
    f = ["1/2^{}".format(i.bit_length() - 1) for i in range(1, 9)]
    assert lab.condensation_violations(f, 3) == 0

    print("smoke test passed")


if __name__ == "__main__":
    main()
