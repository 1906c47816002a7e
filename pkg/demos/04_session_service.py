"""
Running the session service
===========================

Starts the real server over a generated case directory, walks the HTTP
lifecycle with nothing but the standard library, and shows where the
socket stream fits in.  Live streaming itself is what the web client in
frontend/ (and the service test suite) exercise; offline replay produces
byte-identical logs, so the drilling below uses the library directly.
"""

import json
import socket
import subprocess
import sys
import tempfile
import time
import urllib.request
from pathlib import Path

from drillguide import make_slab_case, run_trajectory, write_case_dir
from drillguide.engine import PoseSample

tmp = Path(tempfile.mkdtemp(prefix="drillguide-demo-"))
case = make_slab_case()
write_case_dir(case, tmp / "slab-demo")
print(f"case directory: {tmp}")

# 1. pick a free port and start the service as it would run in production
probe = socket.socket()
probe.bind(("127.0.0.1", 0))
port = probe.getsockname()[1]
probe.close()
server = subprocess.Popen(
    [sys.executable, "-m", "drillguide.cli", "serve", "--cases-dir", str(tmp),
     "--port", str(port)],
    stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
base = f"http://127.0.0.1:{port}"

try:
    for _ in range(50):  # wait for the socket to come up
        try:
            urllib.request.urlopen(f"{base}/cases", timeout=0.2)
            break
        except OSError:
            time.sleep(0.1)

    # 2. discover cases and fetch the binary artifacts the client renders
    cases = json.load(urllib.request.urlopen(f"{base}/cases"))
    print("cases:", [c["case_id"] for c in cases["cases"]])
    vol = urllib.request.urlopen(f"{base}/cases/slab-demo/volume").read()
    plan = urllib.request.urlopen(f"{base}/cases/slab-demo/plan").read()
    print(f"volume file: {len(vol)} bytes, plan file: {len(plan)} bytes")
    print("volume header:", vol.split(b"\n", 1)[0].decode()[:72], "...")

    # 3. open a session; the reply carries everything a client needs
    req = urllib.request.Request(
        f"{base}/sessions",
        data=json.dumps({"case_id": "slab-demo",
                         "guidance_enabled": True}).encode(),
        headers={"Content-Type": "application/json"})
    sess = json.load(urllib.request.urlopen(req))
    sid = sess["session_id"]
    print(f"\nsession {sid[:8]}… label={sess['label']} "
          f"tick={sess['cfg']['tick_ms']} ms")
    print(f"pose frames go to ws://127.0.0.1:{port}/sessions/{sid[:8]}…/stream"
          f' as {{"t","pos_mm","on"}}')

    # 4. the same drilling, replayed offline: the stream would produce the
    #    identical removal log, stamped from the same engine clock
    cx, cy = case.center_xy_mm
    samples = [PoseSample(5 * (i + 1), (cx, cy, 9.7 - 0.03 * i), True)
               for i in range(120)]
    log = run_trajectory(case.plan, case.bone_field, case.cfg, samples,
                         case.home_pose_mm)
    print(f"offline replay of the intended gesture: {len(log)} removals, "
          f"first at t={log[0].t_ms} ms, last at t={log[-1].t_ms} ms")

    # 5. finishing closes the session and returns its scores
    fin = json.load(urllib.request.urlopen(urllib.request.Request(
        f"{base}/sessions/{sid}/finish", method="POST")))
    print(f"\nfinish: breaches={fin['breach_count']} "
          f"time={fin['drill_time_s']} s (no frames were streamed)")
    print(f"log written to {fin['log_path']}")
finally:
    server.terminate()
    server.wait(timeout=10)
print("server stopped")
