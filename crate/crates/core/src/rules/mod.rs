//! Action validation, masks, and turn resolution.

pub mod actions;
pub mod collection;
pub mod end;
pub mod mask;
pub mod movement;
pub mod night;
pub mod turn;

pub use actions::{format_action_line, parse_action_line, Action, ActionParseError, CityAction, UnitAction};
pub use collection::{collect_resources, water_fill, CollectionReport, KindReport};
pub use end::check_game_end;
pub use mask::{valid_actions, validate_action, Rejection, TeamMask};
pub use movement::{resolve_movement, MoveCancel, MoveOutcome};
pub use night::{apply_night, deposit_resources, regrow_wood, NightError, NightReport};
pub use turn::{resolve_turn, ActionOutcome, TurnError, TurnEvents};
