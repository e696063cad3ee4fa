import dataclasses
import subprocess
import sys

import pytest

from eppa.base_extension import base_eppa
from eppa.cli import main
from eppa.structures import Permutation, graph
from eppa.textio import emit_certificate, emit_structure

K2 = graph(2, [(0, 1)])
K3 = graph(3, [(0, 1), (1, 2), (0, 2)])
PATH3 = graph(3, [(0, 1), (1, 2)])


@pytest.fixture
def files(tmp_path):
    paths = {}
    for name, structure in [("k2", K2), ("k3", K3), ("path3", PATH3),
                            ("point", graph(1, []))]:
        p = tmp_path / f"{name}.struct"
        p.write_text(emit_structure(structure, name), encoding="utf-8")
        paths[name] = str(p)
    paths["tmp"] = tmp_path
    return paths


class TestExtendVerify:
    def test_base_extend_then_verify(self, files, capsys):
        out = str(files["tmp"] / "cert.txt")
        assert main(["extend", "--in", files["path3"], "--mode", "base",
                     "--out", out]) == 0
        assert main(["verify", out]) == 0
        assert capsys.readouterr().out.strip() == "ok"

    def test_faithful_with_forbidden(self, files, capsys):
        out = str(files["tmp"] / "cert.txt")
        assert main(["extend", "--in", files["path3"], "--mode", "faithful",
                     "--forbid", files["k3"], "--out", out]) == 0
        assert main(["verify", out]) == 0

    def test_faithful_mode_plain(self, files):
        out = str(files["tmp"] / "cert.txt")
        assert main(["extend", "--in", files["k2"], "--mode", "faithful",
                     "--out", out]) == 0
        assert main(["verify", out]) == 0

    def test_forbid_needs_faithful_mode(self, files):
        out = str(files["tmp"] / "cert.txt")
        assert main(["extend", "--in", files["k2"], "--mode", "base",
                     "--forbid", files["k3"], "--out", out]) == 1

    def test_resource_bound_exit_code(self, files, monkeypatch):
        monkeypatch.setenv("EPPA_MAX_POINTS", "2")
        out = str(files["tmp"] / "cert.txt")
        assert main(["extend", "--in", files["path3"], "--mode", "base",
                     "--out", out]) == 3

    def test_parse_error_exit_code(self, files, tmp_path):
        bad = tmp_path / "bad.struct"
        bad.write_text("structure s\nrel E 2\nsize 2\nE 0 5\nend\n", encoding="utf-8")
        out = str(files["tmp"] / "cert.txt")
        assert main(["extend", "--in", str(bad), "--mode", "base",
                     "--out", out]) == 1

    def test_determinism_byte_identical(self, files):
        out1 = str(files["tmp"] / "c1.txt")
        out2 = str(files["tmp"] / "c2.txt")
        assert main(["extend", "--in", files["path3"], "--mode", "faithful",
                     "--forbid", files["k3"], "--out", out1]) == 0
        assert main(["extend", "--in", files["path3"], "--mode", "faithful",
                     "--forbid", files["k3"], "--out", out2]) == 0
        first = open(out1, "rb").read()
        second = open(out2, "rb").read()
        assert first == second
        assert main(["verify", out1]) == 0

    def test_corrupted_certificate_fails_with_condition(self, files, tmp_path, capsys):
        cert = base_eppa(PATH3)
        key = sorted(k for k in cert.phi.table if k not in ("-",))[0]
        perm = cert.phi.table[key]
        images = list(perm.images)
        images[0], images[1] = images[1], images[0]
        tampered_table = dict(cert.phi.table)
        tampered_table[key] = Permutation(tuple(images))
        phi = dataclasses.replace(cert.phi, table=tampered_table)
        tampered = dataclasses.replace(cert, phi=phi)
        path = tmp_path / "bad_cert.txt"
        path.write_text(emit_certificate(tampered), encoding="utf-8")
        assert main(["verify", str(path)]) == 2
        out = capsys.readouterr().out
        assert out.startswith("fail ")
        assert out.split()[1] in ("coherence", "extension", "automorphism",
                                  "forced-identity", "forced-inverse")


class TestOtherVerbs:
    def test_cliques_listing(self, files, capsys):
        assert main(["cliques", files["k3"], "--max", "2"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert "0" in lines and "0,1" in lines
        assert all(len(line.split(",")) <= 2 for line in lines)

    def test_amalgam_two_edges_over_a_vertex(self, files, capsys):
        assert main(["amalgam", files["k2"], files["k2"],
                     "--over", files["point"]]) == 0
        text = capsys.readouterr().out
        from eppa.textio import parse_structure
        glued = parse_structure(text)
        assert glued == graph(3, [(0, 1), (0, 2)])

    def test_dlf_build_and_verify(self, files):
        out = str(files["tmp"] / "chain.txt")
        assert main(["dlf", "--class", files["k3"], "--stages", "1",
                     "--seed", files["k2"], "--out", out]) == 0
        assert main(["verify", out]) == 0

    def test_minforb_reproduces_forbidder(self, files, capsys):
        assert main(["minforb", "--class-forbid", files["k3"], "--max", "3"]) == 0
        text = capsys.readouterr().out
        from eppa.amalgamation import canonical_form
        from eppa.textio import parse_structure
        blocks = text.strip().split("end")
        structures = [parse_structure(b + "end\n") for b in blocks if b.strip()]
        assert [canonical_form(s) for s in structures] == [canonical_form(K3)]

    def test_console_entry_point(self, files, tmp_path):
        out = tmp_path / "cert.txt"
        result = subprocess.run(
            [sys.executable, "-m", "eppa.cli", "extend", "--in", files["k2"],
             "--mode", "base", "--out", str(out)],
            capture_output=True, text=True)
        assert result.returncode == 0
        assert out.exists()
