import base64
import json
import threading

import pytest
from fastapi.testclient import TestClient

from presenzia.service.app import build_app
from presenzia.service.config import ServiceConfig
from presenzia.gallery import RecognitionConfig
from presenzia.tracking import TrackingConfig

from _synth import encode_png, make_identities

IDENTITIES = make_identities(seed=23, count=7, variants=3)
NAMES = sorted(IDENTITIES)

ADMIN = {"Authorization": "Bearer admin-dev-token"}
AUDITOR = {"Authorization": "Bearer auditor-dev-token"}


def b64(image) -> str:
    return base64.b64encode(encode_png(image)).decode()


@pytest.fixture
def client(tmp_path):
    config = ServiceConfig(
        store_path=":memory:",
        alert_log=str(tmp_path / "alerts.log"),
        recognition=RecognitionConfig(k=3, threshold=0.05),
        tracking=TrackingConfig(n_miss=3, segment_count=4),
    )
    app = build_app(config)
    with TestClient(app) as c:
        c.app = app
        yield c


def enroll(client, i, n_images=2):
    name = NAMES[i]
    resp = client.post(
        "/employees",
        headers=ADMIN,
        json={
            "employee_id": f"emp-{i}",
            "name": f"Person {i}",
            "contact": f"p{i}@example.com",
            "images": [b64(img) for img in IDENTITIES[name][:n_images]],
        },
    )
    assert resp.status_code == 201, resp.text
    return resp.json()


def start_session(client, token, **kwargs):
    resp = client.post(
        "/sessions", headers={"Authorization": f"Bearer {token}"}, json=kwargs or {}
    )
    assert resp.status_code == 201, resp.text
    return resp.json()


def post_frame(client, token, session_id, image):
    return client.post(
        f"/sessions/{session_id}/frames",
        headers={"Authorization": f"Bearer {token}", "Content-Type": "image/png"},
        content=encode_png(image),
    )


class TestHealthAndAuth:
    def test_healthz_open(self, client):
        resp = client.get("/healthz")
        assert resp.status_code == 200
        assert resp.json() == {"status": "ok"}

    def test_missing_token_401(self, client):
        assert client.get("/employees").status_code == 401

    def test_unknown_token_403(self, client):
        resp = client.get("/employees", headers={"Authorization": "Bearer nonsense"})
        assert resp.status_code == 403
        assert resp.json()["code"] == "forbidden"

    def test_whoami_reports_token_role(self, client):
        assert client.get("/whoami", headers=ADMIN).json() == {
            "principal_id": "admin",
            "role": "admin",
        }
        created = enroll(client, 0)
        resp = client.get(
            "/whoami", headers={"Authorization": f"Bearer {created['token']}"}
        )
        assert resp.json() == {"principal_id": "emp-0", "role": "employee"}


class TestEmployeeCrud:
    def test_full_round_trip(self, client):
        created = enroll(client, 0)
        assert created["employee"]["employee_id"] == "emp-0"
        assert created["token"]

        listed = client.get("/employees", headers=ADMIN).json()
        assert [e["employee_id"] for e in listed] == ["emp-0"]
        assert listed[0]["name"] == "Person 0"

        resp = client.put(
            "/employees/emp-0", headers=ADMIN, json={"name": "Renamed"}
        )
        assert resp.status_code == 200
        assert resp.json()["employee"]["name"] == "Renamed"

        resp = client.delete("/employees/emp-0", headers=ADMIN)
        assert resp.status_code == 200
        assert client.get("/employees", headers=ADMIN).json() == []

    def test_duplicate_create_conflict(self, client):
        enroll(client, 0)
        resp = client.post(
            "/employees",
            headers=ADMIN,
            json={
                "employee_id": "emp-0",
                "name": "Dup",
                "contact": "dup@example.com",
                "images": [b64(IDENTITIES[NAMES[1]][0])],
            },
        )
        assert resp.status_code == 409

    def test_employee_role_cannot_mutate_roster(self, client):
        created = enroll(client, 0)
        emp_headers = {"Authorization": f"Bearer {created['token']}"}
        resp = client.post(
            "/employees",
            headers=emp_headers,
            json={"employee_id": "x", "name": "X", "contact": "x@example.com", "images": []},
        )
        assert resp.status_code == 403
        assert client.get("/employees", headers=emp_headers).status_code == 403

    def test_invalid_email_400(self, client):
        resp = client.post(
            "/employees",
            headers=ADMIN,
            json={
                "employee_id": "bad",
                "name": "Bad",
                "contact": "nope",
                "images": [b64(IDENTITIES[NAMES[0]][0])],
            },
        )
        assert resp.status_code == 400
        assert resp.json()["code"] == "validation_error"

    def test_zero_images_rejected(self, client):
        resp = client.post(
            "/employees",
            headers=ADMIN,
            json={"employee_id": "e", "name": "E", "contact": "e@example.com", "images": []},
        )
        assert resp.status_code == 400
        assert resp.json()["code"] == "enrollment_failed"

    def test_unknown_employee_404(self, client):
        assert client.delete("/employees/ghost", headers=ADMIN).status_code == 404


class TestSessions:
    def test_start_and_get(self, client):
        created = enroll(client, 0)
        out = start_session(client, created["token"], planned_duration_s=3600.0, rng_seed=5)
        session_id = out["session"]["session_id"]
        assert out["session"]["status"] == "active"
        assert len(out["schedule"]["check_times"]) == 4

        resp = client.get(
            f"/sessions/{session_id}",
            headers={"Authorization": f"Bearer {created['token']}"},
        )
        assert resp.status_code == 200
        assert resp.json()["session"]["session_id"] == session_id

    def test_double_start_conflict(self, client):
        created = enroll(client, 0)
        start_session(client, created["token"])
        resp = client.post(
            "/sessions", headers={"Authorization": f"Bearer {created['token']}"}, json={}
        )
        assert resp.status_code == 409

    def test_other_employee_cannot_view_session(self, client):
        a = enroll(client, 0)
        b = enroll(client, 1)
        out = start_session(client, a["token"])
        resp = client.get(
            f"/sessions/{out['session']['session_id']}",
            headers={"Authorization": f"Bearer {b['token']}"},
        )
        assert resp.status_code == 403

    def test_admin_board_lists_sessions(self, client):
        a = enroll(client, 0)
        start_session(client, a["token"])
        board = client.get("/sessions", headers=ADMIN).json()
        assert len(board) == 1
        assert board[0]["employee_name"] == "Person 0"
        assert board[0]["status"] == "active"

    def test_end_session(self, client):
        a = enroll(client, 0)
        out = start_session(client, a["token"])
        sid = out["session"]["session_id"]
        headers = {"Authorization": f"Bearer {a['token']}"}
        resp = client.post(f"/sessions/{sid}/end", headers=headers)
        assert resp.status_code == 200
        assert resp.json()["session"]["status"] == "ended"
        resp = client.post(f"/sessions/{sid}/end", headers=headers)
        assert resp.status_code == 409


class TestFrameSubmission:
    def test_own_image_present(self, client):
        a = enroll(client, 0)
        out = start_session(client, a["token"])
        sid = out["session"]["session_id"]
        resp = post_frame(client, a["token"], sid, IDENTITIES[NAMES[0]][2])
        assert resp.status_code == 200, resp.text
        body = resp.json()
        assert body["outcome"] == "present"
        assert body["decision"] == "emp-0"
        assert body["miss_run"] == 0
        assert body["alert_id"] is None
        assert body["best_distance"] <= 0.05

    def test_corrupt_bytes_400_nothing_persisted(self, client):
        a = enroll(client, 0)
        out = start_session(client, a["token"])
        sid = out["session"]["session_id"]
        resp = client.post(
            f"/sessions/{sid}/frames",
            headers={"Authorization": f"Bearer {a['token']}"},
            content=b"definitely not an image",
        )
        assert resp.status_code == 400
        assert resp.json()["code"] == "invalid_image"
        state = client.app.state.service
        assert state.store.query("SELECT COUNT(*) AS n FROM checks")[0]["n"] == 0
        assert state.store.query("SELECT COUNT(*) AS n FROM archive")[0]["n"] == 0

    def test_oversized_payload_rejected(self, client):
        a = enroll(client, 0)
        out = start_session(client, a["token"])
        sid = out["session"]["session_id"]
        resp = client.post(
            f"/sessions/{sid}/frames",
            headers={"Authorization": f"Bearer {a['token']}"},
            content=b"x" * (8 * 1024 * 1024 + 1),
        )
        assert resp.status_code == 400

    def test_wrong_owner_403(self, client):
        a = enroll(client, 0)
        b = enroll(client, 1)
        out = start_session(client, a["token"])
        resp = post_frame(
            client, b["token"], out["session"]["session_id"], IDENTITIES[NAMES[1]][0]
        )
        assert resp.status_code == 403

    def test_ended_session_409(self, client):
        a = enroll(client, 0)
        out = start_session(client, a["token"])
        sid = out["session"]["session_id"]
        client.post(f"/sessions/{sid}/end", headers={"Authorization": f"Bearer {a['token']}"})
        resp = post_frame(client, a["token"], sid, IDENTITIES[NAMES[0]][0])
        assert resp.status_code == 409

    def test_three_stranger_frames_alert_on_third(self, client, tmp_path):
        a = enroll(client, 0)
        enroll(client, 1)
        out = start_session(client, a["token"])
        sid = out["session"]["session_id"]
        stranger = IDENTITIES[NAMES[6]]  # never enrolled

        responses = [post_frame(client, a["token"], sid, img) for img in stranger]
        outcomes = [r.json()["outcome"] for r in responses]
        assert all(o != "present" for o in outcomes)
        assert [r.json()["alert_id"] for r in responses[:2]] == [None, None]
        alert_id = responses[2].json()["alert_id"]
        assert alert_id

        alerts = client.get("/alerts", headers=ADMIN).json()
        assert [al["alert_id"] for al in alerts] == [alert_id]
        assert alerts[0]["miss_run_length"] == 3

        log_lines = [
            json.loads(line)
            for line in (tmp_path / "alerts.log").read_text().splitlines()
        ]
        assert len(log_lines) == 2
        assert {l["recipient"] for l in log_lines} == {"admin", "employee"}

    def test_each_submission_one_check_one_archive_row(self, client):
        a = enroll(client, 0)
        out = start_session(client, a["token"])
        sid = out["session"]["session_id"]
        for i in range(3):
            post_frame(client, a["token"], sid, IDENTITIES[NAMES[0]][i])
        state = client.app.state.service
        assert state.store.query("SELECT COUNT(*) AS n FROM checks")[0]["n"] == 3
        assert state.store.query("SELECT COUNT(*) AS n FROM archive")[0]["n"] == 3


class TestAlertsEndpoint:
    def test_employee_sees_only_own(self, client):
        a = enroll(client, 0)
        b = enroll(client, 1)
        out = start_session(client, a["token"])
        sid = out["session"]["session_id"]
        for img in IDENTITIES[NAMES[6]]:
            post_frame(client, a["token"], sid, img)
        own = client.get("/alerts", headers={"Authorization": f"Bearer {a['token']}"}).json()
        other = client.get("/alerts", headers={"Authorization": f"Bearer {b['token']}"}).json()
        assert len(own) == 1
        assert other == []

    def test_auditor_denied(self, client):
        assert client.get("/alerts", headers=AUDITOR).status_code == 403


class TestArchiveEndpoint:
    def seed_history(self, client):
        a = enroll(client, 0)
        out = start_session(client, a["token"])
        sid = out["session"]["session_id"]
        post_frame(client, a["token"], sid, IDENTITIES[NAMES[0]][0])
        post_frame(client, a["token"], sid, IDENTITIES[NAMES[6]][0])
        return a

    def test_admin_archive_403(self, client):
        self.seed_history(client)
        resp = client.get("/archive", headers=ADMIN)
        assert resp.status_code == 403
        assert resp.json()["code"] == "permission_denied"

    def test_auditor_reads_all(self, client):
        self.seed_history(client)
        records = client.get("/archive", headers=AUDITOR).json()
        assert len(records) == 2
        assert [r["seq"] for r in records] == [1, 2]

    def test_employee_self_view(self, client):
        a = self.seed_history(client)
        headers = {"Authorization": f"Bearer {a['token']}"}
        assert client.get("/archive", headers=headers).status_code == 403
        records = client.get("/archive?self=1", headers=headers).json()
        assert len(records) == 2
        assert all(r["employee_id"] == "emp-0" for r in records)


class TestConcurrency:
    def test_32_concurrent_clients_no_lost_updates(self, client):
        app = client.app
        errors = []

        def worker(i):
            try:
                with TestClient(app) as local:
                    created = local.post(
                        "/employees",
                        headers=ADMIN,
                        json={
                            "employee_id": f"w-{i}",
                            "name": f"W {i}",
                            "contact": f"w{i}@example.com",
                            "images": [b64(IDENTITIES[NAMES[i % 6]][0])],
                        },
                    )
                    assert created.status_code == 201, created.text
                    token = created.json()["token"]
                    out = local.post(
                        "/sessions",
                        headers={"Authorization": f"Bearer {token}"},
                        json={},
                    )
                    assert out.status_code == 201, out.text
                    sid = out.json()["session"]["session_id"]
                    for _ in range(3):
                        resp = post_frame(local, token, sid, IDENTITIES[NAMES[6]][0])
                        assert resp.status_code == 200, resp.text
            except Exception as exc:  # surfaces in the main thread
                errors.append(exc)

        threads = [threading.Thread(target=worker, args=(i,)) for i in range(32)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert errors == []

        state = app.state.service
        employees = client.get("/employees", headers=ADMIN).json()
        assert len(employees) == 32
        alerts = client.get("/alerts", headers=ADMIN).json()
        alert_ids = [a["alert_id"] for a in alerts]
        assert len(alert_ids) == len(set(alert_ids)) == 32  # one per worker session
        n_checks = state.store.query("SELECT COUNT(*) AS n FROM checks")[0]["n"]
        n_archive = state.store.query("SELECT COUNT(*) AS n FROM archive")[0]["n"]
        assert n_checks == n_archive == 96
        seqs = [r["seq"] for r in state.store.query("SELECT seq FROM archive ORDER BY seq")]
        assert seqs == list(range(1, 97))
