import pytest

from bearingsound import cli


@pytest.fixture(scope="session")
def campaign_dir(tmp_path_factory):
    """A small default campaign (16 s per channel) shared across tests."""
    path = tmp_path_factory.mktemp("campaign")
    rc = cli.main(["--seed", "7", "synth", "--default-campaign",
                   "--duration", "16", "--out", str(path)])
    assert rc == 0
    return path


@pytest.fixture(scope="session")
def features_dir(campaign_dir, tmp_path_factory):
    """Feature caches for every channel of the small campaign."""
    path = tmp_path_factory.mktemp("features")
    rc = cli.main(["extract", "--manifest", str(campaign_dir / "manifest.json"),
                   "--out", str(path)])
    assert rc == 0
    return path
