//! Miniature models used by tests, examples, and the Python smoke test.
//!
//! These are deliberately small enough that their kinematics and dynamics
//! can be checked by hand; several test oracles rely on that.

/// Point-mass pendulum (m = 1 kg at L = 1 m, hanging along -z, pivot about
/// y) driven by an antagonistic pair of pulley wraps (r = 0.02 m).
pub const PENDULUM: &str = r#"
[model]
name = "pendulum"
gravity = [0.0, 0.0, -9.81]

[link.root]
mass = 0.0

[link.bob]
mass = 1.0
com = [0.0, 0.0, -1.0]
inertia = [0.0, 0.0, 0.0]

[joint.pivot]
parent = "root"
child = "bob"
origin = [0.0, 0.0, 0.0]
axis = [0.0, 1.0, 0.0]
limits = [-3.2, 3.2]

[route.plus]

[route.plus.segment.0]
type = "circular"
joint = "pivot"
radius = 0.02
sign = 1
arc_offset = 0.3

[route.minus]

[route.minus.segment.0]
type = "circular"
joint = "pivot"
radius = 0.02
sign = -1
arc_offset = 0.3
"#;

/// Pendulum with a single wrap route: l(q) = 0.3 + 0.02·q.
pub const PENDULUM_WRAP: &str = r#"
[model]
name = "pendulum_wrap"

[link.root]
mass = 0.0

[link.bob]
mass = 1.0
com = [0.0, 0.0, -1.0]
inertia = [0.0, 0.0, 0.0]

[joint.pivot]
parent = "root"
child = "bob"
origin = [0.0, 0.0, 0.0]
axis = [0.0, 1.0, 0.0]
limits = [-3.2, 3.2]

[route.wrap]

[route.wrap.segment.0]
type = "circular"
joint = "pivot"
radius = 0.02
sign = 1
arc_offset = 0.3
"#;

/// Pendulum with a single straight span whose anchors are collinear with
/// the pivot: l = 0.1 at every q (zero moment arm).
pub const SPAN_PENDULUM: &str = r#"
[model]
name = "span_pendulum"

[link.root]
mass = 0.0

[link.bob]
mass = 1.0
com = [0.0, 0.0, -1.0]
inertia = [0.0, 0.0, 0.0]

[joint.pivot]
parent = "root"
child = "bob"
origin = [0.0, 0.0, 0.0]
axis = [0.0, 1.0, 0.0]
limits = [-3.2, 3.2]

[route.span]

[route.span.segment.0]
type = "linear"
from_link = "root"
from_point = [0.0, 0.0, 0.0]
to_link = "bob"
to_point = [0.0, 0.0, 0.1]
"#;

/// Pendulum with an off-axis span; the length has a closed form
/// |a - T(q)·b| used as a symbolic oracle.
pub const SPAN_PENDULUM_OFFSET: &str = r#"
[model]
name = "span_pendulum_offset"

[link.root]
mass = 0.0

[link.bob]
mass = 1.0
com = [0.0, 0.0, -1.0]
inertia = [0.0, 0.0, 0.0]

[joint.pivot]
parent = "root"
child = "bob"
origin = [0.0, 0.0, 0.0]
axis = [0.0, 1.0, 0.0]
limits = [-3.2, 3.2]

[route.span]

[route.span.segment.0]
type = "linear"
from_link = "root"
from_point = [0.05, 0.0, 0.05]
to_link = "bob"
to_point = [0.02, 0.0, -0.3]
"#;

/// Planar two-link chain with unit point masses at unit spacing; at q = 0
/// the inertia matrix is [[5, 1], [1, 1]] by hand calculation.
pub const PLANAR2: &str = r#"
[model]
name = "planar2"

[link.root]
mass = 0.0

[link.upper]
mass = 1.0
com = [0.0, 0.0, -1.0]
inertia = [0.0, 0.0, 0.0]

[link.lower]
mass = 1.0
com = [0.0, 0.0, -1.0]
inertia = [0.0, 0.0, 0.0]

[joint.hip]
parent = "root"
child = "upper"
origin = [0.0, 0.0, 0.0]
axis = [0.0, 1.0, 0.0]
limits = [-3.2, 3.2]

[joint.knee]
parent = "upper"
child = "lower"
origin = [0.0, 0.0, -1.0]
axis = [0.0, 1.0, 0.0]
limits = [-3.2, 3.2]
"#;

/// Planar three-rod chain (0.4 kg, 0.3 m rods) with no routes; used for
/// passive-dynamics energy audits.
pub const TRIPLE_ROD: &str = r#"
[model]
name = "triple_rod"

[link.root]
mass = 0.0

[link.a]
mass = 0.4
com = [0.0, 0.0, -0.15]
inertia = [3.0e-3, 3.0e-3, 1.0e-5]

[link.b]
mass = 0.4
com = [0.0, 0.0, -0.15]
inertia = [3.0e-3, 3.0e-3, 1.0e-5]

[link.c]
mass = 0.4
com = [0.0, 0.0, -0.15]
inertia = [3.0e-3, 3.0e-3, 1.0e-5]

[joint.j0]
parent = "root"
child = "a"
origin = [0.0, 0.0, 0.0]
axis = [0.0, 1.0, 0.0]
limits = [-6.3, 6.3]

[joint.j1]
parent = "a"
child = "b"
origin = [0.0, 0.0, -0.3]
axis = [0.0, 1.0, 0.0]
limits = [-6.3, 6.3]

[joint.j2]
parent = "b"
child = "c"
origin = [0.0, 0.0, -0.3]
axis = [0.0, 1.0, 0.0]
limits = [-6.3, 6.3]
"#;

/// Planar 3-DoF arm with four mixed routes (spans crossing one, two, and
/// three joints plus an antagonistic wrap pair).
pub const PLANAR3: &str = r#"
[model]
name = "planar3"

[link.root]
mass = 0.0

[link.a]
mass = 0.6
com = [0.0, 0.0, -0.15]
inertia = [4.5e-3, 4.5e-3, 1.0e-5]

[link.b]
mass = 0.5
com = [0.0, 0.0, -0.15]
inertia = [3.8e-3, 3.8e-3, 1.0e-5]

[link.c]
mass = 0.4
com = [0.0, 0.0, -0.1]
inertia = [1.3e-3, 1.3e-3, 1.0e-5]

[joint.j0]
parent = "root"
child = "a"
origin = [0.0, 0.0, 0.0]
axis = [0.0, 1.0, 0.0]
limits = [-2.0, 2.0]

[joint.j1]
parent = "a"
child = "b"
origin = [0.0, 0.0, -0.3]
axis = [0.0, 1.0, 0.0]
limits = [-2.2, 2.2]

[joint.j2]
parent = "b"
child = "c"
origin = [0.0, 0.0, -0.3]
axis = [0.0, 1.0, 0.0]
limits = [-2.0, 2.0]

[route.front_deep]

[route.front_deep.segment.0]
type = "linear"
from_link = "root"
from_point = [0.05, 0.0, 0.02]
to_link = "c"
to_point = [0.03, 0.0, -0.05]

[route.back_deep]

[route.back_deep.segment.0]
type = "linear"
from_link = "root"
from_point = [-0.05, 0.0, 0.02]
to_link = "c"
to_point = [-0.03, 0.0, -0.05]

[route.front_mid]

[route.front_mid.segment.0]
type = "linear"
from_link = "root"
from_point = [0.04, 0.0, 0.0]
to_link = "b"
to_point = [0.035, 0.0, -0.08]

[route.wrapped]

[route.wrapped.segment.0]
type = "linear"
from_link = "a"
from_point = [-0.04, 0.0, -0.1]
to_link = "b"
to_point = [-0.035, 0.0, -0.12]

[route.wrapped.segment.1]
type = "circular"
joint = "j2"
radius = 0.012
sign = -1
arc_offset = 0.06
"#;

/// Spatial 3-DoF chain with mixed joint axes, a rotated joint origin, and
/// multi-segment routes; exercises every branch of the length kinematics.
pub const SPATIAL3: &str = r#"
[model]
name = "spatial3"

[link.root]
mass = 0.0

[link.a]
mass = 0.8
com = [0.0, 0.0, -0.1]
inertia = [4.0e-3, 4.0e-3, 1.0e-3]

[link.b]
mass = 0.6
com = [0.02, 0.0, -0.12]
inertia = [3.0e-3, 3.0e-3, 8.0e-4]

[link.c]
mass = 0.3
com = [0.0, 0.0, -0.1]
inertia = [1.0e-3, 1.0e-3, 3.0e-4]

[joint.j0]
parent = "root"
child = "a"
origin = [0.0, 0.0, 0.15]
axis = [0.0, 0.0, 1.0]
limits = [-3.0, 3.0]

[joint.j1]
parent = "a"
child = "b"
origin = [0.05, 0.0, -0.2]
rpy = [0.3, 0.0, 0.0]
axis = [0.0, 1.0, 0.0]
limits = [-2.0, 2.0]

[joint.j2]
parent = "b"
child = "c"
origin = [0.0, -0.04, -0.25]
axis = [1.0, 0.0, 0.0]
limits = [-2.5, 2.5]

[route.ra]

[route.ra.segment.0]
type = "linear"
from_link = "root"
from_point = [0.06, 0.0, 0.1]
to_link = "b"
to_point = [0.03, 0.0, -0.1]

[route.ra.segment.1]
type = "circular"
joint = "j2"
radius = 0.012
sign = -1
arc_offset = 0.08

[route.rb]

[route.rb.segment.0]
type = "linear"
from_link = "root"
from_point = [-0.06, 0.02, 0.1]
to_link = "a"
to_point = [-0.04, 0.01, -0.18]

[route.rc]

[route.rc.segment.0]
type = "linear"
from_link = "a"
from_point = [0.0, 0.04, -0.05]
to_link = "c"
to_point = [0.0, 0.03, -0.08]

[route.rc.segment.1]
type = "circular"
joint = "j0"
radius = 0.02
sign = 1
arc_offset = 0.05
"#;
