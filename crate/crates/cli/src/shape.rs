use flowlab::geom::Shape;

/// Initial-data descriptor as written on the command line or in a run config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShapeSpec {
    /// `sphere:auto`, the stationary sphere of the speed in use.
    AutoSphere,
    Fixed(Shape),
}

impl ShapeSpec {
    /// Accepted forms: `sphere:auto`, `sphere:R`, `ellipsoid:A,B`,
    /// `perturbed:R,L,EPS`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let (kind, rest) = text
            .split_once(':')
            .ok_or_else(|| format!("shape `{text}` is missing a `kind:` prefix"))?;
        let nums = |want: usize| -> Result<Vec<f64>, String> {
            let vals = rest
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| format!("shape `{text}`: `{s}`: {e}")))
                .collect::<Result<Vec<_>, _>>()?;
            if vals.len() != want {
                return Err(format!("shape `{text}` needs {want} numbers, got {}", vals.len()));
            }
            Ok(vals)
        };
        let spec = match kind.trim() {
            "sphere" if rest.trim() == "auto" => ShapeSpec::AutoSphere,
            "sphere" => ShapeSpec::Fixed(Shape::Sphere { radius: nums(1)?[0] }),
            "ellipsoid" => {
                let v = nums(2)?;
                ShapeSpec::Fixed(Shape::Ellipsoid { a: v[0], b: v[1] })
            }
            "perturbed" => {
                let v = nums(3)?;
                if !(v[1] >= 0.0 && v[1].fract() == 0.0) {
                    return Err(format!("shape `{text}`: mode must be a non-negative integer"));
                }
                ShapeSpec::Fixed(Shape::PerturbedSphere {
                    radius: v[0],
                    mode: v[1] as usize,
                    amplitude: v[2],
                })
            }
            other => return Err(format!("unknown shape kind `{other}` (sphere, ellipsoid, perturbed)")),
        };
        Ok(spec)
    }

    pub fn resolve(self, auto_radius: f64) -> Shape {
        match self {
            ShapeSpec::AutoSphere => Shape::Sphere { radius: auto_radius },
            ShapeSpec::Fixed(s) => s,
        }
    }
}
