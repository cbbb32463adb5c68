import socket
import subprocess
import sys
import time

import httpx
import pytest
from conftest import make_frames

from palstream import codec
from palstream.cli import main
from palstream.defaults import read_data_file
from palstream.image_io import read_ppm, write_ppm
from palstream.regression import model_from_csv

PROFILE_TEXT = "resolution=300x212\ncpu=0.5\nbattery=0.9\nbandwidth_kbps=640\n"
WALKTHROUGH_LINE = "compressed,11.60546,12,28,640,800,28,20.6"


@pytest.fixture()
def photo_ppm(tmp_path, small_photo):
    path = tmp_path / "photo.ppm"
    path.write_bytes(write_ppm(small_photo))
    return path


@pytest.fixture()
def profile_file(tmp_path):
    path = tmp_path / "profile.txt"
    path.write_text(PROFILE_TEXT)
    return path


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "palstream.cli", *args], capture_output=True, text=True
    )


class TestHappyPaths:
    def test_compress_and_decompress(self, tmp_path, photo_ppm, small_photo, capsys):
        pqf = tmp_path / "photo.pqf"
        assert main(["compress", str(photo_ppm), "--mu", "16", "--out", str(pqf)]) == 0
        fields = capsys.readouterr().out.strip().split(",")
        assert fields[:4] == ["48", "36", "16", str(len(pqf.read_bytes()))]
        assert float(fields[4]) == pytest.approx(codec.compression_ratio(48, 36, 16))
        assert float(fields[5]) > 0 and float(fields[6]) > 0

        out_ppm = tmp_path / "back.ppm"
        assert main(["decompress", str(pqf), "--out", str(out_ppm)]) == 0
        assert capsys.readouterr().out.strip() == "48,36,16"
        decoded = read_ppm(out_ppm.read_bytes())
        assert decoded == codec.decode(codec.encode(small_photo, 16))

    def test_compress_without_out_only_prints(self, tmp_path, photo_ppm, capsys):
        assert main(["compress", str(photo_ppm), "--mu", "8"]) == 0
        assert capsys.readouterr().out.startswith("48,36,8,")
        assert list(tmp_path.glob("*.pqf")) == []

    def test_metrics_identical(self, photo_ppm, capsys):
        assert main(["metrics", str(photo_ppm), str(photo_ppm)]) == 0
        assert capsys.readouterr().out.strip() == "0,inf"

    def test_fit_prints_model_and_diagnostics(self, tmp_path, capsys):
        out = tmp_path / "model.csv"
        assert main(["fit", "--out", str(out)]) == 0
        stdout = capsys.readouterr().out
        file_text = out.read_text()
        assert stdout.startswith(file_text)
        assert stdout.startswith("term,coefficient\n")
        for tag in ("# histogram_bin_edges=", "# histogram_counts=",
                    "# qq_theoretical=", "# qq_observed="):
            assert tag in stdout
        model = model_from_csv(file_text)
        assert model.k == 3

    def test_decide_walkthrough(self, profile_file, capsys):
        assert main(["decide", str(profile_file), "--nominal-kbps", "1000"]) == 0
        assert capsys.readouterr().out.strip() == WALKTHROUGH_LINE

    def test_decide_with_explicit_table_and_model(self, tmp_path, profile_file, capsys):
        table = tmp_path / "table.csv"
        table.write_text(read_data_file("estimation_table.csv"))
        model = tmp_path / "model.csv"
        model.write_text(read_data_file("reference_model.csv"))
        args = ["decide", str(profile_file), str(table), str(model), "--nominal-kbps", "1000"]
        assert main(args) == 0
        assert capsys.readouterr().out.strip() == WALKTHROUGH_LINE

    def test_gen_table_matches_bundled(self, tmp_path, capsys):
        out = tmp_path / "table.csv"
        assert main(["gen-table", "--out", str(out)]) == 0
        stdout = capsys.readouterr().out
        assert stdout == out.read_text() == read_data_file("estimation_table.csv")

    def test_simulate(self, tmp_path, capsys):
        frames_dir = tmp_path / "frames"
        frames_dir.mkdir()
        for i, frame in enumerate(make_frames(3)):
            (frames_dir / f"f{i:02d}.ppm").write_bytes(write_ppm(frame))
        trace = tmp_path / "trace.csv"
        trace.write_text("# nominal_kbps=1000\ntime_ms,bandwidth_kbps\n0,1000\n500,1000\n")
        report = tmp_path / "report.csv"
        args = [
            "simulate", str(frames_dir), str(trace),
            "--loss", "1", "--baseline-mu", "16", "--out", str(report),
        ]
        assert main(args) == 0
        stdout = capsys.readouterr().out
        assert stdout == report.read_text()
        lines = stdout.splitlines()
        assert lines[0] == "frame,mode,mu,bytes,lost,concealed_from,psnr_db"
        assert lines[2].split(",")[4] == "1"
        assert "# total_bytes=" in stdout


class TestErrorReporting:
    def test_usage_error_message_shape(self, photo_ppm, capsys):
        code = main(["compress", str(photo_ppm), "--mu", "1"])
        assert code == 2
        err = capsys.readouterr().err
        assert err.startswith("palstream: [usage] ")
        assert err.endswith("\n")

    def test_missing_file(self, tmp_path, capsys):
        assert main(["metrics", str(tmp_path / "nope.ppm"), str(tmp_path / "nope.ppm")]) == 2
        assert "cannot read" in capsys.readouterr().err

    def test_simulate_empty_dir(self, tmp_path, capsys):
        trace = tmp_path / "trace.csv"
        trace.write_text("# nominal_kbps=1000\ntime_ms,bandwidth_kbps\n0,1000\n")
        frames_dir = tmp_path / "frames"
        frames_dir.mkdir()
        assert main(["simulate", str(frames_dir), str(trace)]) == 2
        assert "no *.ppm frames" in capsys.readouterr().err

    def test_simulate_not_a_directory(self, tmp_path, photo_ppm, capsys):
        trace = tmp_path / "trace.csv"
        trace.write_text("# nominal_kbps=1000\ntime_ms,bandwidth_kbps\n0,1000\n")
        assert main(["simulate", str(photo_ppm), str(trace)]) == 2
        assert "not a directory" in capsys.readouterr().err


class TestExitCodes:
    def test_no_arguments_is_usage(self):
        proc = run_cli()
        assert proc.returncode == 2

    def test_contract_violation_is_2(self, photo_ppm):
        proc = run_cli("compress", str(photo_ppm), "--mu", "1")
        assert proc.returncode == 2
        assert proc.stderr.startswith("palstream: [usage]")

    def test_malformed_input_is_3(self, tmp_path):
        bad = tmp_path / "bad.ppm"
        bad.write_bytes(b"P3\n1 1\n255\n0 0 0\n")
        proc = run_cli("compress", str(bad), "--mu", "4")
        assert proc.returncode == 3
        assert proc.stderr.startswith("palstream: [format]")

    def test_numeric_failure_is_4(self, tmp_path):
        rows = ["image,resolution_code,mu,size_kb,psnr_db,cr"]
        rows += [f"img{i},1,8,{10 + i},{26 + i},1.5" for i in range(8)]
        history = tmp_path / "history.csv"
        history.write_text("\n".join(rows) + "\n")
        proc = run_cli("fit", str(history))
        assert proc.returncode == 4
        assert proc.stderr.startswith("palstream: [numeric]")

    def test_infeasible_is_5(self, tmp_path):
        two_tone = tmp_path / "two.ppm"
        two_tone.write_bytes(b"P6\n2 1\n255\n" + bytes([0, 0, 0, 255, 255, 255]))
        proc = run_cli("compress", str(two_tone), "--mu", "5")
        assert proc.returncode == 5
        assert proc.stderr.startswith("palstream: [infeasible]")

    def test_console_script_installed(self, photo_ppm):
        proc = subprocess.run(
            ["palstream", "metrics", str(photo_ppm), str(photo_ppm)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert proc.stdout.strip() == "0,inf"


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture(scope="module")
def server_url():
    port = _free_port()
    proc = subprocess.Popen(
        [sys.executable, "-m", "palstream.service", "--port", str(port)],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    url = f"http://127.0.0.1:{port}"
    try:
        deadline = time.monotonic() + 30
        while True:
            try:
                if httpx.get(url + "/v1/health", timeout=1.0).status_code == 200:
                    break
            except httpx.HTTPError:
                if time.monotonic() > deadline:
                    raise RuntimeError("service did not come up") from None
                time.sleep(0.1)
        yield url
    finally:
        proc.terminate()
        proc.wait(timeout=10)


class TestServerMode:
    def test_decide_remote_matches_local(self, profile_file, server_url, capsys):
        args = ["decide", str(profile_file), "--nominal-kbps", "1000", "--server", server_url]
        assert main(args) == 0
        assert capsys.readouterr().out.strip() == WALKTHROUGH_LINE

    def test_remote_error_maps_to_exit_code(self, photo_ppm, server_url, capsys):
        args = ["compress", str(photo_ppm), "--mu", "1", "--server", server_url]
        assert main(args) == 2
        assert capsys.readouterr().err.startswith("palstream: [usage]")

    def test_unreachable_server(self, profile_file, capsys):
        args = [
            "decide", str(profile_file), "--nominal-kbps", "1000",
            "--server", "http://127.0.0.1:9",
        ]
        assert main(args) == 2
        assert "cannot reach server" in capsys.readouterr().err
