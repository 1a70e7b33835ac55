"""Regenerate the editor test fixtures from the engine.

Writes into frontend/tests/fixtures/:
  bundle/          full bundle (background + objects + texts)
  bundle_notext/   the same design with the text layers dropped
  composite_notext.png   engine composite of the text-free design

Run from anywhere:  python3 frontend/scripts/make_fixtures.py
"""
from pathlib import Path
import shutil

from relayer.datagen import SyntheticDesignSpec, synth_design
from relayer.design_doc import LayeredDesign, composite, png_bytes, save_bundle

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def main() -> None:
    if FIXTURES.exists():
        shutil.rmtree(FIXTURES)
    FIXTURES.mkdir(parents=True)

    design, _ = synth_design(SyntheticDesignSpec(seed=7, object_count=2, text_count=2))
    save_bundle(design, FIXTURES / "bundle")

    notext = LayeredDesign(
        canvas=design.canvas,
        background=design.background,
        objects=design.objects,
        texts=[],
    )
    save_bundle(notext, FIXTURES / "bundle_notext")
    (FIXTURES / "composite_notext.png").write_bytes(png_bytes(composite(notext)))
    print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    main()
