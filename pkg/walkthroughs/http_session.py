"""Upload a model in three parts over HTTP, fetch its PDDL and drive a run.

Starts a throwaway server on a free local port with a temporary store.

Run: python3 walkthroughs/http_session.py
"""

import http.client
import json
import tempfile
import threading
from pathlib import Path

import kmf
from kmf.service import Service, make_server
from kmf.syntax import parse_model, print_canonical, print_rules
from kmf.terms import Model

SCENARIOS = Path(kmf.__file__).resolve().parent / "data" / "scenarios"


def split(model):
    """The states, transitions and rules documents the service takes, one per part."""
    return {
        "states": print_canonical(Model(model.states, {}, model.initial, model.goal)),
        "transitions": print_canonical(Model(transitions=model.transitions)),
        "rules": print_rules(model.rules),
    }


def call(conn, method, path, body=b""):
    conn.request(method, path, body)
    resp = conn.getresponse()
    data = resp.read()
    print(f"{method} {path} -> {resp.status}")
    return data


def main():
    with tempfile.TemporaryDirectory() as store:
        server = make_server(Service(Path(store)), "127.0.0.1:0")
        threading.Thread(target=server.serve_forever, daemon=True).start()
        host, port = server.server_address[:2]
        conn = http.client.HTTPConnection(host, port)
        try:
            for part, text in split(parse_model((SCENARIOS / "bus.kmf").read_text())).items():
                call(conn, "PUT", f"/models/bus/{part}", text.encode())

            uris = json.loads(call(conn, "POST", "/models/bus/pddl"))
            problem = call(conn, "GET", uris["problem_uri"]).decode()
            print("  " + "\n  ".join(problem.splitlines()[:4]) + "\n  ...")

            plan = json.loads(call(conn, "POST", "/models/bus/plan", b'{"bound": 10000}'))
            print(f"  plan: {' -> '.join(s['transition'] for s in plan['steps'])}")

            run_id = json.loads(call(conn, "POST", "/runs", b'{"model": "bus"}'))["run"]
            status = "running"
            while status in ("running", "replanning"):
                status = json.loads(call(conn, "POST", f"/runs/{run_id}/step"))["status"]
            print(f"  run {run_id} {status}")
        finally:
            conn.close()
            server.shutdown()
            server.server_close()


if __name__ == "__main__":
    main()
