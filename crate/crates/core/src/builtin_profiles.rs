// Generated list of the shipped language profiles.

pub(crate) const BUILTIN: &[(&str, &str, &str)] = &[
    ("om", include_str!("../profiles/om.toml"), include_str!("../profiles/om.exclusions.txt")),
    ("am", include_str!("../profiles/am.toml"), include_str!("../profiles/am.exclusions.txt")),
    ("fr", include_str!("../profiles/fr.toml"), include_str!("../profiles/fr.exclusions.txt")),
    ("ha", include_str!("../profiles/ha.toml"), ""),
    ("ig", include_str!("../profiles/ig.toml"), ""),
    ("rw", include_str!("../profiles/rw.toml"), ""),
    ("pcm", include_str!("../profiles/pcm.toml"), ""),
    ("so", include_str!("../profiles/so.toml"), ""),
    ("sw", include_str!("../profiles/sw.toml"), ""),
    ("ti", include_str!("../profiles/ti.toml"), ""),
    ("yo", include_str!("../profiles/yo.toml"), ""),
    ("ky", include_str!("../profiles/ky.toml"), ""),
    ("uz", include_str!("../profiles/uz.toml"), ""),
    ("id", include_str!("../profiles/id.toml"), ""),
    ("ko", include_str!("../profiles/ko.toml"), ""),
    ("vi", include_str!("../profiles/vi.toml"), ""),
    ("bn", include_str!("../profiles/bn.toml"), include_str!("../profiles/bn.exclusions.txt")),
    ("gu", include_str!("../profiles/gu.toml"), include_str!("../profiles/gu.exclusions.txt")),
    ("hi", include_str!("../profiles/hi.toml"), include_str!("../profiles/hi.exclusions.txt")),
    ("mr", include_str!("../profiles/mr.toml"), include_str!("../profiles/mr.exclusions.txt")),
    ("ne", include_str!("../profiles/ne.toml"), ""),
    ("ps", include_str!("../profiles/ps.toml"), ""),
    ("pa", include_str!("../profiles/pa.toml"), ""),
    ("si", include_str!("../profiles/si.toml"), include_str!("../profiles/si.exclusions.txt")),
    ("ta", include_str!("../profiles/ta.toml"), ""),
    ("te", include_str!("../profiles/te.toml"), ""),
    ("ur", include_str!("../profiles/ur.toml"), include_str!("../profiles/ur.exclusions.txt")),
    ("az", include_str!("../profiles/az.toml"), ""),
    ("ru", include_str!("../profiles/ru.toml"), ""),
    ("sr", include_str!("../profiles/sr.toml"), ""),
    ("tr", include_str!("../profiles/tr.toml"), ""),
    ("uk", include_str!("../profiles/uk.toml"), include_str!("../profiles/uk.exclusions.txt")),
    ("cy", include_str!("../profiles/cy.toml"), include_str!("../profiles/cy.exclusions.txt")),
    ("en", include_str!("../profiles/en.toml"), ""),
    ("pt", include_str!("../profiles/pt.toml"), include_str!("../profiles/pt.exclusions.txt")),
    ("es", include_str!("../profiles/es.toml"), ""),
    ("ar", include_str!("../profiles/ar.toml"), ""),
    ("fa", include_str!("../profiles/fa.toml"), include_str!("../profiles/fa.exclusions.txt")),
];
