use serde::{Deserialize, Serialize};

/// What the operator did with a day's overage or shortage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionClass {
    SellExactOverage,
    SellOveragePlusInventory,
    SellPartStoreRest,
    StoreOverageAndBuy,
    BuyExactShortage,
    BuyMoreStoreRest,
    BuyLessDrawStorage,
    SellDespiteShortage,
}

impl ActionClass {
    pub const ALL: [ActionClass; 8] = [
        ActionClass::SellExactOverage,
        ActionClass::SellOveragePlusInventory,
        ActionClass::SellPartStoreRest,
        ActionClass::StoreOverageAndBuy,
        ActionClass::BuyExactShortage,
        ActionClass::BuyMoreStoreRest,
        ActionClass::BuyLessDrawStorage,
        ActionClass::SellDespiteShortage,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_overage(self) -> bool {
        self.index() < 4
    }

    pub fn label(self) -> &'static str {
        match self {
            ActionClass::SellExactOverage => "sell_exact_overage",
            ActionClass::SellOveragePlusInventory => "sell_overage_plus_inventory",
            ActionClass::SellPartStoreRest => "sell_part_store_rest",
            ActionClass::StoreOverageAndBuy => "store_overage_and_buy",
            ActionClass::BuyExactShortage => "buy_exact_shortage",
            ActionClass::BuyMoreStoreRest => "buy_more_store_rest",
            ActionClass::BuyLessDrawStorage => "buy_less_draw_storage",
            ActionClass::SellDespiteShortage => "sell_despite_shortage",
        }
    }
}

/// Classifies action `u` against net production `y_bar`. Equality is
/// judged within half an action step; days with `|y_bar|` below half a step
/// have neither overage nor shortage and yield `None`.
pub fn classify_action(y_bar: f64, u: f64, du: f64) -> Option<ActionClass> {
    let tol = du / 2.0;
    if y_bar.abs() < tol {
        return None;
    }
    let exact = (u - y_bar).abs() <= tol;
    Some(if y_bar > 0.0 {
        if exact {
            ActionClass::SellExactOverage
        } else if u > y_bar {
            ActionClass::SellOveragePlusInventory
        } else if u >= 0.0 {
            ActionClass::SellPartStoreRest
        } else {
            ActionClass::StoreOverageAndBuy
        }
    } else if exact {
        ActionClass::BuyExactShortage
    } else if u < y_bar {
        ActionClass::BuyMoreStoreRest
    } else if u <= 0.0 {
        ActionClass::BuyLessDrawStorage
    } else {
        ActionClass::SellDespiteShortage
    })
}
