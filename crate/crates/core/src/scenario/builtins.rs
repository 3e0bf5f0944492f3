//! Built-in scenarios, embedded as TOML so they can be listed, shown, and
//! forked as plain files.

/// Straight-line leader, one follower taking the left flank in the same
/// horizontal plane. Large cylindrical tank.
pub const SEC41_STRAIGHT: &str = r#"
name = "sec41_straight"
duration = 60.0
controller_variant = "zonal"

[tank]
shape = "cylinder"
diameter = 6400.0
depth = 2400.0

[[agents]]
role = "leader"
init = { pose = { x = -2200.0, y = 0.0, z = -300.0, yaw_deg = 0.0 } }
[agents.program]
kind = "straight"
caudal_freq = 1.0
depth_setpoint = 300.0

[[agents]]
role = "follower"
init = { region = { x = [-2450.0, -2150.0], y = [550.0, 850.0], z = [-450.0, -150.0] } }
[agents.controller]
approach_threshold = 500.0
dead_radius = 120.0
follow_distance = 200.0
follow_angle_deg = 90.0
pitch_band_deg = [-1.0, 1.0]
"#;

/// Leader circling counterclockwise; follower holds the right flank, the
/// outside of the turn, deeper than the leader.
pub const SEC42_CIRCLE_OUTSIDE: &str = r#"
name = "sec42_circle_outside"
duration = 90.0
controller_variant = "zonal"

[tank]
shape = "cylinder"
diameter = 6400.0
depth = 2400.0

[[agents]]
role = "leader"
init = { pose = { x = 600.0, y = 0.0, z = -300.0, yaw_deg = 90.0 } }
[agents.program]
kind = "circle"
caudal_freq = 1.1
pectoral_bias = 0.074
depth_setpoint = 300.0

[[agents]]
role = "follower"
init = { region = { x = [0.0, 800.0], y = [-1200.0, -400.0], z = [-550.0, -350.0] } }
[agents.controller]
follow_distance = 150.0
follow_angle_deg = -90.0
pitch_band_deg = [-45.0, -40.0]
"#;

/// Same circling leader; follower holds the left flank, the inside of the
/// turn, deeper than the leader.
pub const SEC42_CIRCLE_INSIDE: &str = r#"
name = "sec42_circle_inside"
duration = 90.0
controller_variant = "zonal"

[tank]
shape = "cylinder"
diameter = 6400.0
depth = 2400.0

[[agents]]
role = "leader"
init = { pose = { x = 600.0, y = 0.0, z = -300.0, yaw_deg = 90.0 } }
[agents.program]
kind = "circle"
caudal_freq = 1.1
pectoral_bias = 0.074
depth_setpoint = 300.0

[[agents]]
role = "follower"
init = { region = { x = [0.0, 800.0], y = [-1200.0, -400.0], z = [-550.0, -350.0] } }
[agents.controller]
follow_distance = 150.0
follow_angle_deg = 90.0
pitch_band_deg = [-45.0, -40.0]
"#;

/// Two followers flanking a leader that runs straight legs joined by a
/// turn, in the small rectangular pool.
pub const SEC43_TWO_FOLLOWERS: &str = r#"
name = "sec43_two_followers"
duration = 35.0
controller_variant = "zonal"

[tank]
shape = "box"
x = 2200.0
y = 1400.0
depth = 500.0

[[agents]]
role = "leader"
init = { pose = { x = -700.0, y = -250.0, z = -250.0, yaw_deg = 0.0 } }
[agents.program]
kind = "piecewise"
depth_setpoint = 250.0
segments = [
  { duration = 15.0, caudal_freq = 0.8 },
  { duration = 8.0, caudal_freq = 0.8, pectoral_bias = 0.2 },
  { duration = 12.0, caudal_freq = 0.8 },
]

[[agents]]
role = "follower"
init = { region = { x = [-1000.0, -800.0], y = [-600.0, 100.0], z = [-350.0, -150.0] } }
[agents.controller]
follow_angle_deg = 90.0

[[agents]]
role = "follower"
init = { region = { x = [-1000.0, -800.0], y = [-350.0, 350.0], z = [-350.0, -150.0] } }
[agents.controller]
follow_angle_deg = -90.0
"#;

/// One circling leader with an inside and an outside follower at 200 mm in
/// the same plane; run with --variant to compare the zonal and tanh speed
/// laws over paired seeds.
pub const SEC51_ZONAL_VS_TANH: &str = r#"
name = "sec51_zonal_vs_tanh"
duration = 90.0
controller_variant = "zonal"

[tank]
shape = "cylinder"
diameter = 6400.0
depth = 2400.0

[[agents]]
role = "leader"
init = { pose = { x = 600.0, y = 0.0, z = -300.0, yaw_deg = 90.0 } }
[agents.program]
kind = "circle"
caudal_freq = 1.1
pectoral_bias = 0.074
depth_setpoint = 300.0

[[agents]]
role = "follower"
init = { region = { x = [-500.0, 500.0], y = [-500.0, 500.0], z = [-400.0, -200.0] } }
[agents.controller]
follow_distance = 200.0
follow_angle_deg = 90.0

[[agents]]
role = "follower"
init = { region = { x = [-500.0, 500.0], y = [-500.0, 500.0], z = [-400.0, -200.0] } }
[agents.controller]
follow_distance = 200.0
follow_angle_deg = -90.0
"#;

/// Six followers arranged hexagonally around a circling leader. The
/// followers directly ahead of and behind the leader face the hard
/// geometry: the rear blind spot and the hidden nose LED.
pub const SEC52_HEXAGON: &str = r#"
name = "sec52_hexagon"
duration = 120.0
controller_variant = "zonal"

[tank]
shape = "cylinder"
diameter = 6400.0
depth = 2400.0

[[agents]]
role = "leader"
init = { pose = { x = 600.0, y = 0.0, z = -300.0, yaw_deg = 90.0 } }
[agents.program]
kind = "circle"
caudal_freq = 1.1
pectoral_bias = 0.074
depth_setpoint = 300.0

[[agents]]
role = "follower"
init = { region = { x = [300.0, 900.0], y = [300.0, 900.0], z = [-350.0, -250.0] } }
[agents.controller]
follow_distance = 300.0
follow_angle_deg = 0.0

[[agents]]
role = "follower"
init = { region = { x = [300.0, 900.0], y = [-900.0, -300.0], z = [-350.0, -250.0] } }
[agents.controller]
follow_distance = 300.0
follow_angle_deg = 60.0

[[agents]]
role = "follower"
init = { region = { x = [-300.0, 300.0], y = [-900.0, -300.0], z = [-350.0, -250.0] } }
[agents.controller]
follow_distance = 300.0
follow_angle_deg = 120.0

[[agents]]
role = "follower"
init = { region = { x = [-900.0, -300.0], y = [-300.0, 300.0], z = [-350.0, -250.0] } }
[agents.controller]
follow_distance = 300.0
follow_angle_deg = 180.0

[[agents]]
role = "follower"
init = { region = { x = [-300.0, 300.0], y = [300.0, 900.0], z = [-350.0, -250.0] } }
[agents.controller]
follow_distance = 300.0
follow_angle_deg = -120.0

[[agents]]
role = "follower"
init = { region = { x = [900.0, 1500.0], y = [-300.0, 300.0], z = [-350.0, -250.0] } }
[agents.controller]
follow_distance = 300.0
follow_angle_deg = -60.0
"#;

/// Two leaders circling in opposite directions with four followers that
/// sort themselves by proximity.
pub const SEC52_TWO_LEADERS: &str = r#"
name = "sec52_two_leaders"
duration = 90.0
controller_variant = "zonal"

[tank]
shape = "cylinder"
diameter = 6400.0
depth = 2400.0

[[agents]]
role = "leader"
init = { pose = { x = 800.0, y = 600.0, z = -300.0, yaw_deg = 90.0 } }
[agents.program]
kind = "circle"
caudal_freq = 1.1
pectoral_bias = 0.074
depth_setpoint = 300.0

[[agents]]
role = "leader"
init = { pose = { x = -800.0, y = -600.0, z = -300.0, yaw_deg = -90.0 } }
[agents.program]
kind = "circle"
caudal_freq = 1.1
pectoral_bias = -0.1
depth_setpoint = 300.0

[[agents]]
role = "follower"
init = { region = { x = [-800.0, 0.0], y = [-400.0, 400.0], z = [-400.0, -200.0] } }
[agents.controller]
follow_angle_deg = 90.0

[[agents]]
role = "follower"
init = { region = { x = [0.0, 800.0], y = [-400.0, 400.0], z = [-400.0, -200.0] } }
[agents.controller]
follow_angle_deg = 90.0

[[agents]]
role = "follower"
init = { region = { x = [-400.0, 400.0], y = [-800.0, 0.0], z = [-400.0, -200.0] } }
[agents.controller]
follow_angle_deg = -90.0

[[agents]]
role = "follower"
init = { region = { x = [-400.0, 400.0], y = [0.0, 800.0], z = [-400.0, -200.0] } }
[agents.controller]
follow_angle_deg = -90.0
"#;

/// Short two-agent scenario for quick end-to-end checks.
pub const SMOKE_10S: &str = r#"
name = "smoke_10s"
duration = 10.0
controller_variant = "zonal"

[tank]
shape = "box"
x = 2200.0
y = 1400.0
depth = 500.0

[[agents]]
role = "leader"
init = { pose = { x = -600.0, y = 0.0, z = -250.0, yaw_deg = 0.0 } }
[agents.program]
kind = "straight"
caudal_freq = 1.0
depth_setpoint = 250.0

[[agents]]
role = "follower"
init = { pose = { x = -1000.0, y = 100.0, z = -200.0, yaw_deg = 20.0 } }
[agents.controller]
"#;

const ALL: &[(&str, &str)] = &[
    ("sec41_straight", SEC41_STRAIGHT),
    ("sec42_circle_outside", SEC42_CIRCLE_OUTSIDE),
    ("sec42_circle_inside", SEC42_CIRCLE_INSIDE),
    ("sec43_two_followers", SEC43_TWO_FOLLOWERS),
    ("sec51_zonal_vs_tanh", SEC51_ZONAL_VS_TANH),
    ("sec52_hexagon", SEC52_HEXAGON),
    ("sec52_two_leaders", SEC52_TWO_LEADERS),
    ("smoke_10s", SMOKE_10S),
];

/// Names of all built-in scenarios, in listing order.
pub fn names() -> Vec<&'static str> {
    ALL.iter().map(|(n, _)| *n).collect()
}

/// The TOML text of a built-in scenario.
pub fn get(name: &str) -> Option<&'static str> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}
