use serde::{Deserialize, Serialize};

use crate::network::{Network, PartnerId};

/// A repelled pair that could still reach each other through a partner both
/// are attracted to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndirectLink {
    pub from: PartnerId,
    pub to: PartnerId,
    pub via: PartnerId,
    pub direct: f64,
    /// The weaker of the two attractions through `via`.
    pub two_hop: f64,
}

/// Lists pairs with negative direct force that share an adjacent partner
/// attracting both of them. Severed relations do not carry the link.
pub fn indirect_link_candidates(net: &Network) -> Vec<IndirectLink> {
    let adjacency = net.adjacency();
    let mut out = Vec::new();
    for (&via, list) in &adjacency {
        for (i, &a) in list.iter().enumerate() {
            for &c in &list[i + 1..] {
                if net.is_severed(a, via) || net.is_severed(via, c) {
                    continue;
                }
                let direct = net.force(a, c).expect("adjacent partners exist");
                let fa = net.force(a, via).expect("adjacent partners exist");
                let fc = net.force(via, c).expect("adjacent partners exist");
                if direct < 0.0 && fa > 0.0 && fc > 0.0 {
                    out.push(IndirectLink {
                        from: a,
                        to: c,
                        via,
                        direct,
                        two_hop: fa.min(fc),
                    });
                }
            }
        }
    }
    out.sort_by_key(|l| (l.from, l.to, l.via));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::business_map::{PreferenceTable, Predicate};
    use crate::geometry::{BoundingBox, Point2};
    use crate::network::Partner;

    #[test]
    fn broker_between_rivals() {
        let mut net = Network::new(BoundingBox::centered(10.0), vec![]);
        let a = net.add_partner(Partner::new(0, "north").with_goals(["x"]), Point2::new(-2.0, 0.0)).unwrap();
        let b = net.add_partner(Partner::new(0, "hub").with_goals(["x", "y"]), Point2::new(0.0, 0.0)).unwrap();
        let c = net.add_partner(Partner::new(0, "south").with_goals(["y"]), Point2::new(2.0, 0.1)).unwrap();
        net.table = PreferenceTable::new()
            .row("rivals", Predicate::SharedGoals { min: 0 }, -1.0)
            .row("common ground", Predicate::SharedGoals { min: 1 }, 2.0);
        let links = indirect_link_candidates(&net);
        assert_eq!(
            links,
            vec![IndirectLink {
                from: a,
                to: c,
                via: b,
                direct: -1.0,
                two_hop: 1.0
            }]
        );
        net.sever(a, b);
        assert!(indirect_link_candidates(&net).is_empty());
    }
}
