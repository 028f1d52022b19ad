import numpy as np
import pytest

from stimeeg.channels import CANONICAL_1020
from stimeeg.edf import EdfHeader, write_edf, parse_edf
from stimeeg.ingest import (
    IngestError,
    PhoticTrain,
    Recording,
    Segment,
    SegmentKind,
    Sidecar,
    detect_ips_trains,
    format_sidecar,
    load_recording,
    locate_segments,
    parse_sidecar,
    select_channels,
)


def header_for(labels, fs=200.0, n=400, dims=None):
    ns = len(labels)
    return EdfHeader(
        version="0", patient_id="", recording_id="",
        start_datetime=None, header_bytes=256 + 256 * ns,
        n_records=int(n / fs), record_duration_s=1.0, n_signals=ns,
        labels=list(labels), transducers=[""] * ns,
        physical_dimensions=dims or ["uV"] * ns,
        physical_min=[-1000.0] * ns, physical_max=[1000.0] * ns,
        digital_min=[-32768] * ns, digital_max=[32767] * ns,
        prefilters=[""] * ns, samples_per_record=[int(fs)] * ns,
    )


def square_train(fs, dur_s, freq, amp=100.0):
    t = np.arange(int(dur_s * fs)) / fs
    return amp * (np.sign(np.sin(2 * np.pi * freq * t)) + 1) / 2


class TestSelectChannels:
    def test_photic_reported_separately(self):
        labels = ["EEG FP1-REF", "Photic PH", "ECG"]
        sigs = [np.ones(400), np.zeros(400), np.ones(400)]
        with pytest.raises(IngestError, match="insufficient montage"):
            select_channels(header_for(labels), sigs)
        labels += ["EEG O2-REF"]
        sigs += [np.ones(400)]
        rec, photic, photic_fs = select_channels(header_for(labels), sigs)
        assert rec.channels == ("Fp1", "O2")
        assert photic is not None and photic_fs == 200.0

    def test_millivolt_scaling(self):
        labels = ["C3", "C4"]
        sigs = [np.full(400, 0.05), np.zeros(400)]
        rec, _, _ = select_channels(header_for(labels, dims=["mV", "mV"]), sigs)
        assert np.allclose(rec.data[0], 50.0)

    def test_unknown_unit_rejected(self):
        with pytest.raises(IngestError, match="unknown unit"):
            select_channels(header_for(["C3", "C4"], dims=["V", "uV"]),
                            [np.zeros(400)] * 2)

    def test_all_nineteen_plus_extras_canonical_order(self):
        labels = [f"EEG {c.upper()}-REF" for c in reversed(CANONICAL_1020)]
        labels += ["Photic PH", "EKG", "EMG"]
        sigs = [np.full(400, float(i)) for i in range(len(labels))]
        rec, photic, _ = select_channels(header_for(labels), sigs)
        assert rec.channels == CANONICAL_1020
        assert rec.data.shape == (19, 400)
        # Row order follows the canonical list, not input order.
        rev = list(reversed(CANONICAL_1020))
        for row, name in zip(rec.data, rec.channels):
            assert row[0] == float(rev.index(name))

    def test_modern_names_mapped(self):
        rec, _, _ = select_channels(header_for(["T7", "P8"]),
                                    [np.zeros(400), np.zeros(400)])
        assert rec.channels == ("T3", "T6")

    def test_canonical_order_deterministic_under_permutation(self):
        labels = ["O1", "Fp1", "Cz", "T3"]
        sigs = [np.full(400, float(i)) for i in range(4)]
        rec1, _, _ = select_channels(header_for(labels), sigs)
        rec2, _, _ = select_channels(header_for(labels[::-1]), sigs[::-1])
        assert rec1.channels == rec2.channels == ("Fp1", "T3", "Cz", "O1")
        assert np.array_equal(rec1.data, rec2.data)


class TestDetectTrains:
    def test_two_pulse_trains_vs_fft_oracle(self):
        fs = 250.0
        x = np.concatenate([
            np.zeros(int(10 * fs)),
            square_train(fs, 5, 9.0),
            np.zeros(int(5 * fs)),
            square_train(fs, 5, 11.0),
        ])
        trains = detect_ips_trains(x, fs)
        assert len(trains) == 2
        for train, nominal in zip(trains, (9.0, 11.0)):
            seg = x[train.start_sample:train.end_sample]
            freqs = np.fft.rfftfreq(len(seg), 1 / fs)
            mags = np.abs(np.fft.rfft(seg - seg.mean()))
            band = (freqs >= 0.5) & (freqs <= 30)
            oracle = freqs[band][np.argmax(mags[band])]
            assert abs(train.flash_frequency_hz - nominal) <= 0.5
            assert abs(train.flash_frequency_hz - oracle) <= 0.5

    def test_all_zero_channel_empty(self):
        assert detect_ips_trains(np.zeros(5000), 250.0) == []

    def test_continuous_train_covers_file(self):
        fs = 250.0
        x = square_train(fs, 40, 15.0)
        trains = detect_ips_trains(x, fs)
        assert len(trains) == 1
        t = trains[0]
        assert (t.end_sample - t.start_sample) >= 0.9 * len(x)
        assert abs(t.flash_frequency_hz - 15.0) <= 0.5

    def test_low_fs_errors(self):
        with pytest.raises(IngestError, match="too low"):
            detect_ips_trains(np.zeros(1000), 40.0)

    def test_translation_equivariance(self):
        fs = 200.0
        hop = int(0.25 * fs)
        x = np.concatenate([np.zeros(int(8 * fs)), square_train(fs, 5, 13.0),
                            np.zeros(int(8 * fs))])
        base = detect_ips_trains(x, fs)
        delta = 4 * hop
        shifted = np.concatenate([np.zeros(delta), x])
        moved = detect_ips_trains(shifted, fs)
        assert len(base) == len(moved) == 1
        assert moved[0].start_sample - base[0].start_sample == delta
        assert moved[0].end_sample - base[0].end_sample == delta


class TestLocateSegments:
    def rec(self, n=120000, fs=200.0):
        return Recording("s1", ("C3", "C4"), fs, np.zeros((2, n)))

    def test_ips_and_longest_resting(self):
        fs = 200.0
        rec = self.rec(n=int(600 * fs))
        trains = [PhoticTrain(int(100 * fs), int(150 * fs), 9.0),
                  PhoticTrain(int(250 * fs), int(300 * fs), 11.0)]
        out = locate_segments(rec, trains)
        ips = out.segment(SegmentKind.IPS)
        rest = out.segment(SegmentKind.RESTING)
        assert (ips.start_sample, ips.end_sample) == (int(100 * fs), int(300 * fs))
        assert (rest.start_sample, rest.end_sample) == (int(300 * fs), int(600 * fs))

    def test_no_trains_no_hv_single_resting(self):
        out = locate_segments(self.rec(), [])
        assert [s.kind for s in out.segments] == [SegmentKind.RESTING]
        assert out.segments[0].end_sample == out.n_samples

    def test_hv_overlapping_ips_errors(self):
        fs = 200.0
        rec = self.rec(n=int(600 * fs))
        trains = [PhoticTrain(int(100 * fs), int(300 * fs), 9.0)]
        with pytest.raises(IngestError, match="overlapping annotations"):
            locate_segments(rec, trains, hv_markers=(200.0, 400.0))

    def test_hv_from_markers(self):
        fs = 200.0
        out = locate_segments(self.rec(n=int(600 * fs)), [], hv_markers=(100.0, 250.0))
        hv = out.segment(SegmentKind.HV)
        assert (hv.start_sample, hv.end_sample) == (int(100 * fs), int(250 * fs))
        rest = out.segment(SegmentKind.RESTING)
        assert (rest.start_sample, rest.end_sample) == (int(250 * fs), int(600 * fs))


class TestSidecar:
    def test_roundtrip(self):
        sc = Sidecar("s07", label="epileptic", ied_free=False,
                     hv_start_s=300.0, hv_end_s=480.0)
        back = parse_sidecar(format_sidecar(sc))
        assert back == sc

    def test_minimal(self):
        sc = parse_sidecar("subject_id: s01\n")
        assert sc.subject_id == "s01" and sc.label is None and sc.ied_free

    def test_bad_label(self):
        with pytest.raises(IngestError, match="label"):
            parse_sidecar("subject_id: a\nlabel: sick\n")


def test_load_recording_end_to_end(tmp_path):
    fs = 200.0
    n = int(120 * fs)
    rng = np.random.default_rng(1)
    labels = [f"EEG {c}-REF" for c in CANONICAL_1020] + ["Photic PH"]
    photic = np.zeros(n)
    i0 = int(40 * fs)
    photic[i0:i0 + int(5 * fs)] = square_train(fs, 5, 9.0)
    sigs = [rng.normal(0, 20, n) for _ in CANONICAL_1020] + [photic]
    raw = write_edf(labels, sigs, fs, physical_range=(-500, 500))
    p = tmp_path / "rec1.edf"
    p.write_bytes(raw)
    (tmp_path / "rec1.edf.ann").write_text(
        "subject_id: s42\nlabel: non_epileptic\nied_free: true\n"
        "hv_start_s: 80\nhv_end_s: 110\n")

    res = load_recording(p)
    assert res.recording.subject_id == "s42"
    assert res.recording.label == "non_epileptic"
    assert len(res.trains) == 1
    kinds = {s.kind for s in res.recording.segments}
    assert kinds == {SegmentKind.IPS, SegmentKind.HV, SegmentKind.RESTING}
