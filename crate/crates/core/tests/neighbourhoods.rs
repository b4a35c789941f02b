//! Repair neighbourhoods against brute-force enumeration.

mod common;

use common::*;
use fuzzyrepair::domain::shift::{RepairKind, ShiftType, Weekday};

#[test]
fn toy_sizes() {
    // 6 choices of the free subgroup per Mon-Wed day, 3 of the free group per Thu/Fri
    assert_eq!(day_shift_schedules(&toy_mon_wed()).len(), 216);
    assert_eq!(day_shift_schedules(&toy_mon_fri()).len(), 216 * 9);
}

#[test]
fn mon_wed_has_the_expected_swaps() {
    let p = toy_mon_wed();
    let all = day_shift_schedules(&p);
    // free subgroups 0, 1, 2 on Mon, Tue, Wed: every pair of days allows
    // exactly one swap of the two free subgroups
    let s = all
        .iter()
        .find(|s| (0..3).all(|d| s.get(d, d).is_none()))
        .unwrap();
    let n = library_neighbours(RepairKind::MonWed, &p, s);
    assert_eq!(n.len(), 3);
    assert_eq!(n, oracle_mon_wed(&p, &all, s));
}

#[test]
fn every_neighbourhood_matches_its_oracle() {
    for c in all_cases() {
        assert!(c.equal, "{}: library and oracle neighbourhoods differ", c.name);
        assert!(c.neighbours > 0, "{}: oracle found no neighbours", c.name);
    }
}

#[test]
fn weekend_oracle_respects_shift_types() {
    let p = toy_weekends();
    let s = weekend_start(&p, 3);
    let sat = days_where(&p, |w| w == Weekday::Sat);
    let td = oracle_relocation_pairs(&p, &s, ShiftType::TDWE, &days_where(&p, Weekday::is_weekend));
    let sw = oracle_relocation_pairs(&p, &s, ShiftType::SWWE, &sat);
    assert!(td.is_disjoint(&sw));
}
