"""Rebuild the vendored digit-only font subsets.

Each source font is cut down to U+0030..U+0039 and renamed so the result
does not reuse the upstream family name (required by the Bitstream Vera
terms that DejaVu inherits, and by the reserved font names of the OFL
fonts). Copyright and license name records are kept.
"""
import sys
from fontTools import subset
from fontTools.ttLib import TTFont

MPL = "/usr/local/lib/python3.10/dist-packages/matplotlib/mpl-data/fonts/ttf/"
KTX = "/usr/local/lib/python3.10/dist-packages/marimo/_static/assets/"

SOURCES = {
    "dejavu_sans_mono": MPL + "DejaVuSansMono.ttf",
    "dejavu_sans_mono_bold": MPL + "DejaVuSansMono-Bold.ttf",
    "dejavu_sans_mono_oblique": MPL + "DejaVuSansMono-Oblique.ttf",
    "dejavu_sans_bold": MPL + "DejaVuSans-Bold.ttf",
    "dejavu_sans_oblique": MPL + "DejaVuSans-Oblique.ttf",
    "dejavu_serif": MPL + "DejaVuSerif.ttf",
    "katex_sans": KTX + "KaTeX_SansSerif-Regular-BNo7hRIc.ttf",
    "katex_sans_bold": KTX + "KaTeX_SansSerif-Bold-CFMepnvq.ttf",
    "katex_typewriter": KTX + "KaTeX_Typewriter-Regular-D3Ib7_Hf.ttf",
    "katex_main": KTX + "KaTeX_Main-Regular-ypZvNtVU.ttf",
    "general_serif": MPL + "STIXGeneral.ttf",
    "general_serif_bold": MPL + "STIXGeneralBol.ttf",
}


def build(font_id, src, out_dir):
    font = TTFont(src)
    opts = subset.Options()
    opts.name_IDs = ["*"]
    opts.notdef_outline = True
    sub = subset.Subsetter(opts)
    sub.populate(unicodes=range(0x30, 0x3A))
    sub.subset(font)
    family = "FFDigits " + font_id.replace("_", " ").title()
    for rec in font["name"].names:
        if rec.nameID in (1, 3, 4, 16, 21):
            rec.string = family
        elif rec.nameID in (6, 20):
            rec.string = family.replace(" ", "")
        elif rec.nameID in (2, 17, 22):
            rec.string = "Regular"
    font.save(f"{out_dir}/{font_id}.ttf")


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "."
    for fid, path in SOURCES.items():
        build(fid, path, out)
