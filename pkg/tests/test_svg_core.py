import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import baking
from keyframer import svg_core
from keyframer.errors import MalformedXml, NotAnSvg
from keyframer.svg_core import (
    AffineTransform,
    parse_path_data,
    parse_svg,
    parse_transform,
    serialize,
    serialize_path_data,
)

SIMPLE = '<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 10 10"><circle id="c" cx="5" cy="5" r="2"/></svg>'


class TestParse:
    def test_minimal_document(self):
        doc = parse_svg(SIMPLE)
        assert doc.root.local_name == "svg"
        assert doc.view_box == (0.0, 0.0, 10.0, 10.0)
        assert doc.root.element_children()[0].id == "c"

    def test_malformed_xml_reports_offset(self):
        text = '<svg xmlns="x"><circle</svg>'
        with pytest.raises(MalformedXml) as exc_info:
            parse_svg(text)
        assert exc_info.value.offset == text.index("</svg>")

    def test_unclosed_tag(self):
        with pytest.raises(MalformedXml):
            parse_svg("<svg><g></svg>")

    def test_non_svg_root(self):
        with pytest.raises(NotAnSvg):
            parse_svg("<html><body/></html>")

    def test_duplicate_ids_renamed_with_warning(self):
        doc = parse_svg('<svg><g id="a"/><g id="a"/><g id="a"/></svg>')
        kids = doc.root.element_children()
        assert [k.id for k in kids] == ["a", "a-dup-1", "a-dup-2"]
        assert len(doc.warnings) == 2

    def test_namespaced_attributes_preserved(self):
        doc = parse_svg('<svg xmlns:sketch="http://x"><g sketch:type="MSPage" id="p"/></svg>')
        g = doc.root.element_children()[0]
        assert g.attributes["sketch:type"] == "MSPage"

    def test_text_content_preserved(self):
        doc = parse_svg("<svg><text id='t'>hello</text></svg>")
        text_el = doc.root.element_children()[0]
        assert text_el.children[0].text == "hello"


class TestSerialize:
    def test_round_trip_structure(self, saturn_text):
        doc = parse_svg(saturn_text)
        again = parse_svg(serialize(doc))
        assert again.root == doc.root

    def test_id_first_attribute_ordering(self):
        doc = parse_svg('<svg><rect x="1" id="r" width="2"/></svg>')
        out = serialize(doc, id_first=True)
        assert '<rect id="r" x="1" width="2"/>' in out

    def test_attribute_escaping(self):
        doc = parse_svg('<svg><g id="a" data-x="1 &amp; 2"/></svg>')
        assert 'data-x="1 &amp; 2"' in serialize(doc)


class TestTransformParsing:
    def test_single_functions(self):
        m, ok = parse_transform("translate(3,4)")
        assert ok and (m.e, m.f) == (3, 4)
        m, ok = parse_transform("scale(2)")
        assert ok and (m.a, m.d) == (2, 2)
        m, ok = parse_transform("matrix(1 2 3 4 5 6)")
        assert ok and (m.a, m.b, m.c, m.d, m.e, m.f) == (1, 2, 3, 4, 5, 6)

    def test_rotate_about_point(self):
        m, ok = parse_transform("rotate(90 10 10)")
        assert ok
        x, y = m.apply(10, 0)
        assert (round(x, 9), round(y, 9)) == (20, 10)

    def test_skew_marks_unsupported(self):
        _, ok = parse_transform("skewX(10)")
        assert not ok

    def test_composition_order_left_to_right(self):
        m, _ = parse_transform("translate(10,0) scale(2)")
        assert m.apply(1, 0) == (12, 0)

    @given(st.floats(-360, 360))
    def test_rotation_is_conformal(self, deg):
        assert AffineTransform.rotate(deg).is_conformal(tol=1e-9)

    @given(*(st.floats(-5, 5) for _ in range(6)))
    @settings(max_examples=50)
    def test_compose_matches_sequential_apply(self, a, b, c, d, e, f):
        m1 = AffineTransform(a, b, c, d, e, f)
        m2 = AffineTransform.rotate(30).compose(AffineTransform.translate(2, 3))
        composed = m2.compose(m1)
        for p in [(0, 0), (1, 0), (3, -4)]:
            direct = m2.apply(*m1.apply(*p))
            via = composed.apply(*p)
            assert math.hypot(direct[0] - via[0], direct[1] - via[1]) < 1e-9


class TestPathData:
    def test_relative_to_absolute(self):
        segs = parse_path_data("m 10 10 l 5 0 v 5 h -5 z")
        assert segs == [("M", 10, 10), ("L", 15, 10), ("L", 15, 15), ("L", 10, 15), ("Z",)]

    def test_smooth_cubic_reflection(self):
        segs = parse_path_data("M0 0C0 10 10 10 10 0S20 -10 20 0")
        assert segs[2] == ("C", 10, -10, 20, -10, 20, 0)

    def test_smooth_quad_reflection(self):
        segs = parse_path_data("M0 0Q5 10 10 0T20 0")
        assert segs[2] == ("Q", 15, -10, 20, 0)

    def test_implicit_command_repetition(self):
        segs = parse_path_data("M0 0 10 10 20 20")
        assert [s[0] for s in segs] == ["M", "L", "L"]

    def test_compact_arc_flags(self):
        segs = parse_path_data("M0 0A5 5 0 011.5.5")
        assert segs[1] == ("A", 5, 5, 0, 0, 1, 1.5, 0.5)

    def test_bad_path_raises(self):
        with pytest.raises(svg_core.PathSyntaxError):
            parse_path_data("M0 0 L x")

    def test_serialize_round_trip(self):
        d = "M0 0L10 5C1 1 2 2 3 3Q4 4 5 5A5 3 20 0 1 8 8Z"
        assert serialize_path_data(parse_path_data(d)) == d


class TestBaking:
    @pytest.mark.parametrize("transform_kind", baking.TRANSFORM_KINDS)
    @pytest.mark.parametrize("geom_kind", baking.GEOMETRY_KINDS)
    def test_sampled_geometry_matches_affine_oracle(self, transform_kind, geom_kind):
        baking.run_pair(transform_kind, geom_kind, 5, seed=7)

    def test_nested_group_transforms_compose(self):
        svg = ('<svg><g transform="translate(10,0)"><g transform="scale(2)">'
               '<circle id="c" cx="1" cy="1" r="1"/></g></g></svg>')
        doc = svg_core.bake_transforms(parse_svg(svg))
        c = doc.root.element_children()[0].element_children()[0].element_children()[0]
        assert (c.float_attr("cx"), c.float_attr("cy"), c.float_attr("r")) == (12, 2, 2)

    def test_identity_transform_removed(self):
        doc = svg_core.bake_transforms(
            parse_svg('<svg><rect transform="translate(0,0)" x="1" y="1" width="2" height="2"/></svg>'))
        assert "transform" not in doc.root.element_children()[0].attributes

    def test_skew_preserved_with_warning(self):
        doc = svg_core.bake_transforms(
            parse_svg('<svg><rect id="r" transform="skewX(10)" x="0" y="0" width="1" height="1"/></svg>'))
        rect = doc.root.element_children()[0]
        assert "transform" in rect.attributes
        assert any("r" in w for w in doc.warnings)

    def test_text_transform_preserved(self):
        doc = svg_core.bake_transforms(
            parse_svg('<svg><g transform="translate(5,5)"><text id="t">x</text></g></svg>'))
        text_el = doc.root.element_children()[0].element_children()[0]
        assert text_el.attributes["transform"] == "matrix(1,0,0,1,5,5)"
        assert doc.warnings

    def test_rotated_rect_becomes_path(self):
        doc = svg_core.bake_transforms(
            parse_svg('<svg><rect transform="rotate(45)" x="0" y="0" width="2" height="2"/></svg>'))
        assert doc.root.element_children()[0].local_name == "path"

    def test_negative_determinant_flips_arc_sweep(self):
        svg = '<svg><path transform="scale(-1,1)" d="M0 0A5 5 0 0 1 5 5"/></svg>'
        doc = svg_core.bake_transforms(parse_svg(svg))
        segs = parse_path_data(doc.root.element_children()[0].attributes["d"])
        assert segs[1][5] == 0


class TestMinify:
    def test_drops_comments_and_metadata(self, saturn_text):
        doc = svg_core.minify(parse_svg(saturn_text))
        out = serialize(doc)
        assert "<!--" not in out
        assert "<title>" not in out
        assert "<desc>" not in out

    def test_drops_editor_attributes(self):
        doc = svg_core.minify(parse_svg(
            '<svg xmlns:sketch="http://x"><g sketch:type="MSPage" id="g">'
            '<rect width="1" height="1"/></g></svg>'))
        g = doc.root.element_children()[0]
        assert g.attributes == {"id": "g"}

    def test_drops_empty_groups(self):
        doc = svg_core.minify(parse_svg('<svg><g id="empty"></g><g id="full"><rect width="1" height="1"/></g></svg>'))
        assert [e.id for e in doc.root.element_children()] == ["full"]


class TestIndexAndPreprocess:
    def test_index_lists_ids_in_document_order(self, saturn_text):
        index = svg_core.element_index(parse_svg(saturn_text))
        ids = index.ids()
        assert ids[0] == "sky"
        assert "sparkle-2" in ids
        assert ids.index("planet") < ids.index("halo-outer")

    def test_index_records_depth_and_parent(self, saturn_text):
        index = svg_core.element_index(parse_svg(saturn_text))
        entry = next(e for e in index.entries if e.id == "halo-outer")
        assert entry.parent_id == "halos"
        assert entry.kind == "ellipse"
        assert entry.depth == 3

    def test_preprocess_output_reparses(self, saturn_text):
        result = svg_core.preprocess(saturn_text)
        doc = parse_svg(result.svg)
        assert doc.root.local_name == "svg"
        assert "transform" not in result.svg

    def test_preprocess_stats(self, saturn_text):
        result = svg_core.preprocess(saturn_text)
        assert result.stats.char_count == len(result.svg)
        assert result.stats.line_count == len(result.svg.splitlines())
        assert result.stats.approx_tokens == math.ceil(len(result.svg) / 4)

    def test_preprocess_json_round_trip(self, saturn_text):
        result = svg_core.preprocess(saturn_text)
        again = svg_core.PreprocessResult.from_json(result.to_json())
        assert again.svg == result.svg
        assert again.index == result.index
