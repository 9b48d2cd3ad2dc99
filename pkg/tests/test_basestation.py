"""Base-station tests: frame ordering, command lifecycle with retransmits,
duplicate-suppressed artifact reports, persistence round-trip, and the
HTTP surface."""

import math

import numpy as np
import pytest
from fastapi.testclient import TestClient

from tunnelblimp.api import create_app
from tunnelblimp.basestation import BaseStation, CommandRejected
from tunnelblimp.runlog import load_run, save_run
from tunnelblimp.telemetry import (FramePoint, LinkState, LossyLink,
                                   SituationalFrame, serialize_frame)

FOV = math.pi / 2


def frame(seq, alt=0.6):
    pts = (FramePoint(3, 2.0, -0.1), FramePoint(4, 2.5, 0.1))
    return SituationalFrame(seq=seq, timestamp=float(seq), points=pts,
                            altitude=alt, mode=1, nav_d=0.0, nav_phi=0.0)


def station_with_run(**kw):
    st = BaseStation(**kw)
    st.start_run("test", 0)
    return st


class TestFrameIngest:
    def test_in_order_updates_latest(self):
        st = station_with_run()
        st.ingest_frame(frame(4), b"", 4.0)
        out = st.ingest_frame(frame(5), b"", 5.0)
        assert out == {"accepted": True, "stale": False}
        assert st.latest_frame.seq == 5

    def test_out_of_order_stored_stale(self):
        st = station_with_run()
        st.ingest_frame(frame(5), b"", 5.0)
        out = st.ingest_frame(frame(3), b"", 5.5)
        assert out["stale"]
        assert st.latest_frame.seq == 5
        assert len(st.record.frames) == 2
        assert st.record.frames[1]["stale"]

    def test_no_active_run_rejected(self):
        st = BaseStation()
        with pytest.raises(RuntimeError):
            st.ingest_frame(frame(1), b"", 1.0)

    def test_one_hz_minute_log(self):
        st = station_with_run()
        for i in range(60):
            st.ingest_frame(frame(i), b"", float(i))
        entries = st.record.frames
        assert len(entries) == 60
        times = [e["received_at"] for e in entries]
        assert times == sorted(times)

    def test_latest_view_tracks_max_seq(self):
        st = station_with_run()
        rng = np.random.default_rng(0)
        seqs = rng.permutation(30).tolist()
        for i, s in enumerate(seqs):
            st.ingest_frame(frame(s), b"", float(i))
        assert st.latest_frame.seq == max(
            s for i, s in enumerate(seqs)
            if s == max(seqs[:i + 1]))  # max delivered so far at the end
        assert st.latest_frame.seq == max(seqs)


class TestCommands:
    def test_happy_path_delivery(self):
        st = station_with_run()
        downlink = LossyLink(np.random.default_rng(0))
        link = LinkState(latency_mean=0.05, latency_jitter=0.0)
        cid = st.issue_command("stop", 0.5, 1.0, issued_at=0.0)
        st.service_command_channel(downlink, link, 0.0)
        payloads = downlink.poll(0.1)
        assert len(payloads) == 1
        st.on_ack(1, 0.2)
        assert st.command_status(cid)["status"] == "delivered"

    def test_total_loss_fails_after_retransmits(self):
        st = station_with_run()
        downlink = LossyLink(np.random.default_rng(0))
        link = LinkState(base_success=0.0)
        cid = st.issue_command("forward", 0.5, 1.0, issued_at=0.0)
        t = 0.0
        for _ in range(12):  # enough service ticks to exhaust 1 + 3 attempts
            st.service_command_channel(downlink, link, t)
            t += 1.0
        status = st.command_status(cid)
        assert status["status"] == "failed"
        assert status["attempts"] == 4  # initial + 3 retransmits

    def test_validation_rejects_long_pulse(self):
        st = station_with_run()
        with pytest.raises(CommandRejected):
            st.issue_command("forward", 0.5, 20.0)

    def test_validation_rejects_unknown_kind(self):
        st = station_with_run()
        with pytest.raises(CommandRejected):
            st.issue_command("warp", 0.5, 1.0)

    def test_no_pending_after_run_end(self):
        st = station_with_run()
        st.issue_command("forward", 0.5, 1.0, issued_at=0.0)
        st.issue_command("stop", 0.5, 1.0, issued_at=0.0)
        record = st.end_run("completed", ended_at=10.0)
        assert all(c["status"] in ("delivered", "failed") for c in record.commands)


class TestReports:
    def test_first_report_recorded(self):
        st = station_with_run()
        r = st.record_detection("backpack", (10.0, 1.0, 0.5), 3, 12.0)
        assert r is not None
        assert len(st.record.reports) == 1

    def test_nearby_same_class_suppressed(self):
        st = station_with_run()
        st.record_detection("backpack", (10.0, 1.0, 0.5))
        assert st.record_detection("backpack", (11.0, 1.0, 0.5)) is None
        assert len(st.record.reports) == 1

    def test_far_same_class_kept(self):
        st = station_with_run()
        st.record_detection("backpack", (10.0, 1.0, 0.5))
        assert st.record_detection("backpack", (16.0, 1.0, 0.5)) is not None

    def test_same_spot_other_class_kept(self):
        st = station_with_run()
        st.record_detection("backpack", (10.0, 1.0, 0.5))
        assert st.record_detection("drill", (10.0, 1.0, 0.5)) is not None
        assert len(st.record.reports) == 2


class TestPersistence:
    def test_round_trip_identity(self, tmp_path):
        st = station_with_run()
        for i in range(5):
            st.ingest_frame(frame(i), serialize_frame(frame(i), FOV), float(i))
        st.issue_command("forward", 0.5, 1.0, issued_at=1.0)
        st.record_detection("drill", (3.0, 0.5, 0.3), 2, 2.5)
        record = st.end_run("completed", ended_at=6.0, metrics={"duration": 6.0})
        path = save_run(record, tmp_path)
        loaded = load_run(path)
        assert loaded.__dict__ == record.__dict__


class TestHttpApi:
    def client(self, station=None):
        station = station or station_with_run()
        return station, TestClient(create_app(station))

    def test_live_state_round_trip(self):
        st, client = self.client()
        st.ingest_frame(frame(7), b"\x01\x02", 7.0)
        body = client.get("/live/state").json()
        assert body["frame"]["seq"] == 7
        assert body["frame"]["points"] == [[3, 2.0, -0.1], [4, 2.5, 0.1]]
        assert body["staleness"] == 0.0

    def test_live_state_empty(self):
        _, client = self.client()
        assert client.get("/live/state").json()["frame"] is None

    def test_post_command_and_status(self):
        st, client = self.client()
        r = client.post("/commands", json={"kind": "backward", "magnitude": 0.6,
                                           "duration": 2.0})
        assert r.status_code == 200
        cid = r.json()["command_id"]
        assert client.get(f"/commands/{cid}").json()["status"] == "queued"

    def test_post_command_validation_error(self):
        _, client = self.client()
        r = client.post("/commands", json={"kind": "forward", "duration": 30.0})
        assert r.status_code == 422

    def test_runs_listing_and_detail(self):
        st, client = self.client()
        st.ingest_frame(frame(1), b"", 1.0)
        st.end_run("completed", ended_at=2.0)
        runs = client.get("/runs").json()
        assert len(runs) == 1
        run_id = runs[0]["run_id"]
        detail = client.get(f"/runs/{run_id}").json()
        assert detail["status"] == "completed"
        assert len(detail["frames"]) == 1
        assert client.get("/runs/nope").status_code == 404

    def test_start_run_conflict(self):
        _, client = self.client()
        r = client.post("/runs", json={"scenario": "x"})
        assert r.status_code == 409  # one already active

    def test_reports_endpoint(self):
        st, client = self.client()
        st.record_detection("survivor", (5.0, 0.0, 0.2))
        body = client.get("/reports").json()
        assert body[0]["cls"] == "survivor"
