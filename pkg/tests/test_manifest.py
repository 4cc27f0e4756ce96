import hashlib

from tokforge.manifest import RunManifest, file_sha256


def test_file_sha256_matches_hashlib(tmp_path):
    p = tmp_path / "data.bin"
    p.write_bytes(b"some bytes \x00\xff" * 1000)
    assert file_sha256(p) == hashlib.sha256(p.read_bytes()).hexdigest()


def test_manifest_round_trip(tmp_path):
    manifest = RunManifest(
        tool="tokforge",
        version="0.1.0",
        subcommand="train-bpe",
        config={"vocab_size": 300, "out": "tok"},
        inputs={"corpus.txt": "ab" * 32},
        templates={"seed_prompt_v1.txt": "cd" * 32},
        seed=7,
        started="2024-01-01T00:00:00+00:00",
        finished="2024-01-01T00:00:05+00:00",
    )
    path = tmp_path / "manifest.json"
    manifest.save(path)
    loaded = RunManifest.load(path)
    assert loaded == manifest
    assert loaded.to_dict() == manifest.to_dict()
