"""Fitting component rates from the measured-cost table."""

import dataclasses
import io

import pytest

from pisim.costmodel import (
    CalibrationOptions,
    InconsistentRows,
    Protocol,
    TableFormatError,
    calibrate,
    load_shipped_costs,
    read_measured_costs,
    write_measured_costs,
)


@pytest.fixture(scope="module")
def rows():
    return load_shipped_costs()


@pytest.fixture(scope="module")
def cm(rows):
    return calibrate(rows)


def test_residuals_within_published_tolerances(cm):
    rep = cm.report
    assert rep.max_latency_residual <= 0.10
    assert rep.max_storage_residual <= 0.05
    assert len(rep.row_residuals) == 12
    for key, lat, sto in rep.row_residuals:
        assert lat <= 0.10, key
        assert sto <= 0.05, key


def test_gc_rate_in_physical_band(cm):
    # one garbled relu costs a few label-sets plus transfer framing
    assert 17_000 <= cm.gc_bytes_per_relu <= 20_000


def test_he_share_anchors(cm):
    anchors = cm.report.he_share_anchors
    assert anchors
    for key, share in anchors.items():
        assert 0.90 <= share <= 1.0, key


def test_calibrated_protocols_cover_both(cm):
    assert cm.calibrated_protocols == frozenset(Protocol)


def test_tight_tolerance_rejected(rows):
    opts = CalibrationOptions(latency_tolerance=1e-4, validate=True)
    with pytest.raises(InconsistentRows):
        calibrate(rows, options=opts)


def test_wire_time_exceeding_latency_rejected(rows):
    bloated = dataclasses.replace(
        rows[0],
        offline_comm_bytes=int(
            2 * rows[0].offline_latency_s * rows[0].bandwidth_bytes_per_s
        ),
    )
    with pytest.raises(InconsistentRows):
        calibrate(rows[1:] + [bloated])


def test_tsv_roundtrip_preserves_rows(rows):
    buf = io.StringIO()
    write_measured_costs(buf, rows)
    buf.seek(0)
    assert read_measured_costs(buf) == rows


def test_tsv_missing_columns():
    with pytest.raises(TableFormatError):
        read_measured_costs(io.StringIO("protocol\tmodel\nsg\tresnet32\n"))


def test_tsv_bad_number():
    header = (
        "protocol\tmodel\tdataset\toffline_latency_s\tonline_latency_s\t"
        "client_storage_bytes\tserver_storage_bytes\tbandwidth_bytes_per_s\t"
        "offline_comm_bytes\tonline_comm_bytes\n"
    )
    line = "sg\tresnet32\tc100\tnope\t9.4\t1\t1\t1e8\t1\t1\n"
    with pytest.raises(TableFormatError):
        read_measured_costs(io.StringIO(header + line))


def test_calibration_is_deterministic(rows):
    a = calibrate(rows)
    b = calibrate(list(reversed(rows)))
    assert a.gc_bytes_per_relu == b.gc_bytes_per_relu
    assert a.he_conv_s_per_flop == b.he_conv_s_per_flop
